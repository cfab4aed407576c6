import numpy as np
import pytest

from errors import BadParameter, NotInverse, NotPrime, ParseError
from stallings_toolkit import (NO, YES, abelian_invariants, accepts, build_family, canonical_form,
                               dump_automaton, fold, format_word, free_reduce, from_edges, invert_word,
                               is_gnil_extendible, isomorphic, nil_closure, p_closure, parse_basis,
                               parse_word, rank_mod_p, tree_basis, trim_to_core)


def test_parse_and_format_words():
    assert parse_word('aB') == (1, -2)
    assert parse_word('abBA') == ()
    assert parse_word('1') == ()
    assert format_word((1, -2)) == 'aB'
    assert format_word(()) == '1'
    assert format_word((1, -2), alphabet=('x', 'y')) == 'x.y^-1'
    with pytest.raises(ParseError):
        parse_word('a1')


def test_free_reduce_and_invert():
    assert free_reduce((1, 2, -2, -1, 3)) == (3,)
    assert invert_word((1, -2)) == (2, -1)


def test_parse_basis_skips_comments_and_empty_words():
    basis = parse_basis("aa  # square\n\nbB\nab\n")
    assert basis == [(1, 1), (1, 2)]


def test_fold_small_subgroups():
    assert fold([parse_word('aa')]).n == 2
    assert fold([parse_word('ab'), parse_word('ba')]).n == 3
    # aab and ab generate a and b
    bouquet = fold([parse_word('aab'), parse_word('ab')])
    assert bouquet.n == 1
    assert accepts(bouquet, parse_word('a'))
    assert accepts(bouquet, parse_word('B'))


def test_fold_accepts_exactly_the_subgroup():
    aut = fold([parse_word('aa'), parse_word('bab')])
    assert aut.is_inverse
    assert accepts(aut, parse_word('aa'))
    assert accepts(aut, parse_word('aabab'))
    assert accepts(aut, parse_word('BAB'))
    assert not accepts(aut, parse_word('a'))
    assert not accepts(aut, parse_word('b'))


def test_trim_removes_hanging_trees():
    aut = build_family('A', 4)
    assert trim_to_core(aut).n == aut.n
    hairy = from_edges(3, 0, ('a', 'b'), [(0, 0, 0), (0, 1, 1), (1, 1, 2)])
    assert trim_to_core(hairy).n == 1


def test_tree_basis_refolds_to_the_same_automaton():
    rng = np.random.default_rng(5)
    checked = 0
    while checked < 100:
        words = [tuple(int(s) for s in rng.choice([1, -1, 2, -2], size=rng.integers(1, 6)))
                 for _ in range(rng.integers(1, 4))]
        aut = fold(words, alphabet=('a', 'b'))
        if aut.n > 12:
            continue
        basis = tree_basis(aut)
        assert len(basis) == len(aut.edges) - aut.n + 1
        assert all(accepts(aut, w) for w in words)
        assert isomorphic(fold(basis, alphabet=aut.alphabet), aut)
        checked += 1


def test_from_edges_requires_partial_injections():
    with pytest.raises(NotInverse):
        from_edges(3, 0, ('a',), [(0, 0, 1), (0, 0, 2)])


def test_families():
    b6 = build_family('B', 6)
    assert b6.n == 6
    assert accepts(b6, parse_word('aaaaaa'))
    assert not accepts(b6, parse_word('b'))
    assert build_family('A', 6).n == 7
    assert len(build_family('C', 6).edges) == 12
    with pytest.raises(BadParameter):
        build_family('B', 1)
    with pytest.raises(BadParameter):
        build_family('D', 3)


def test_dump_automaton():
    text = dump_automaton(build_family('C', 2))
    lines = text.splitlines()
    assert lines[0] == 'base 1'
    assert '1 a 2' in lines
    assert '2 b 1' in lines


def test_rank_mod_p():
    matrix = [[1, -1], [6, 0]]
    assert rank_mod_p(matrix, 5) == 2
    assert rank_mod_p(matrix, 2) == 1
    assert rank_mod_p(matrix, 3) == 1
    assert rank_mod_p(np.zeros((0, 2)), 3) == 0


def test_abelian_invariants():
    assert abelian_invariants([[1, -1], [6, 0]]) == (2, [1, 6])
    assert abelian_invariants([[2, 0], [0, 0]]) == (1, [2])


@pytest.mark.parametrize('p, quotient', [(2, 2), (3, 3)])
def test_p_closure_of_b6(p, quotient):
    closure, congruence = p_closure(build_family('B', 6), p)
    assert isomorphic(closure, build_family('C', quotient))
    assert len(congruence.classes) == quotient
    assert all(len(c) == 6 // quotient for c in congruence.classes)


def test_p_closure_of_b6_at_5_is_the_bouquet():
    closure, congruence = p_closure(build_family('B', 6), 5)
    assert closure.n == 1
    assert len(congruence.classes) == 1


def test_p_closure_needs_a_prime():
    with pytest.raises(NotPrime):
        p_closure(build_family('B', 6), 4)


def test_nil_closure_of_b6_is_c6():
    result = nil_closure(build_family('B', 6))
    assert isomorphic(result.automaton, build_family('C', 6))
    assert result.exact
    assert {2, 3} <= set(result.primes)
    assert result.congruence.is_trivial


@pytest.mark.parametrize('l', [4, 5])
def test_nil_closure_keeps_prime_power_cycles(l):
    aut = build_family('B', l)
    result = nil_closure(aut)
    assert isomorphic(result.automaton, aut)
    assert result.congruence.is_trivial
    assert is_gnil_extendible(aut).status == YES


@pytest.mark.parametrize('l', [6, 15])
def test_a_family_is_not_extendible(l):
    verdict = is_gnil_extendible(build_family('A', l))
    assert verdict.status == NO
    assert verdict.exact
    u, v = verdict.pair
    assert u != v


def test_p_closure_is_idempotent():
    rng = np.random.default_rng(9)
    for _ in range(100):
        words = [tuple(int(s) for s in rng.choice([1, -1, 2, -2], size=rng.integers(1, 5)))
                 for _ in range(2)]
        aut = fold(words, alphabet=('a', 'b'))
        for p in (2, 3, 5):
            closure, _ = p_closure(aut, p)
            again, congruence = p_closure(closure, p)
            assert canonical_form(trim_to_core(again)) == canonical_form(trim_to_core(closure))
            assert congruence.is_trivial
