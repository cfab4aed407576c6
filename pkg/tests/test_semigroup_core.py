import numpy as np
import pytest

from errors import CapExceeded, DegreeMismatch, InternalInconsistency, SemanticError
from semigroup_core import (THETA, PartialMap, adjoin_identity, close_generators, evaluate_word,
                            from_table, omega_iterate, omega_limit_batch, omega_power)


def test_partial_map_composes_left_to_right():
    x = PartialMap.from_pairs(3, [(1, 2), (2, 3)])
    y = PartialMap.from_pairs(3, [(2, 1)])
    assert x.then(y) == PartialMap.from_pairs(3, [(1, 1)])
    assert y.then(x) == PartialMap.from_pairs(3, [(2, 2)])


def test_partial_map_basics():
    m = PartialMap.from_points([2, None, 1])
    assert m.images == (1, THETA, 0)
    assert m.domain() == (0, 2)
    assert m.rank() == 2
    assert m.is_partial_injection()
    assert m.inverse() == PartialMap.from_points([3, 1, None])
    assert m.to_points() == [2, None, 1]
    assert not PartialMap.from_points([1, 1, 2]).is_partial_injection()


def test_partial_map_rejects_out_of_range_image():
    with pytest.raises(SemanticError):
        PartialMap((0, 5))


def test_compose_degree_mismatch():
    with pytest.raises(DegreeMismatch):
        PartialMap((0,)).then(PartialMap((0, 1)))


def test_full_transformation_monoid_on_three_points():
    gens = [PartialMap.from_points(p) for p in ([2, 3, 1], [2, 1, 3], [1, 1, 3])]
    S = close_generators(gens, names=['r', 's', 'e'])
    assert S.size == 27
    assert S.degree == 3
    assert S.identity is not None
    assert S.zero is None
    assert S.elements[S.generator('s')] == gens[1]


def test_closure_words_evaluate_to_their_elements():
    gens = [PartialMap.from_points([2, 3, None]), PartialMap.from_points([None, 1, 2])]
    S = close_generators(gens)
    for x in range(S.size):
        assert evaluate_word(S, S.words[x]) == x
    assert S.zero is not None


def test_closure_cap():
    gens = [PartialMap.from_points(p) for p in ([2, 3, 1], [2, 1, 3], [1, 1, 3])]
    with pytest.raises(CapExceeded):
        close_generators(gens, cap=5)


def test_closure_degree_mismatch():
    with pytest.raises(DegreeMismatch):
        close_generators([PartialMap((0,)), PartialMap((0, 1))])


def test_from_table_picks_generators_greedily():
    S = from_table([[0, 1], [1, 1]])
    assert S.generators == (0, 1)
    assert S.identity == 0
    assert S.zero == 1


def test_from_table_rejects_non_associative_table():
    with pytest.raises(InternalInconsistency):
        from_table([[1, 0], [0, 0]])


def test_from_table_rejects_bad_shape():
    with pytest.raises(SemanticError):
        from_table([[0, 1]])


def test_adjoin_identity_on_semigroup_without_one(gallery):
    S = gallery('Brandt 2')
    S1 = adjoin_identity(S)
    assert S1.size == S.size + 1
    assert S1.identity == 0
    assert S1.words[0] == ()
    assert S1.word_string(0) == '1'
    assert adjoin_identity(S1) is S1


def test_adjoin_identity_on_monoid_relabels(gallery):
    S = gallery('C 3')
    S1 = adjoin_identity(S)
    assert S1.size == 3
    assert S1.identity == 0


def test_omega_of_cyclic_group(gallery):
    S = gallery('C 4')
    r = S.generator('r')
    omega, omega_minus = omega_power(S, r)
    assert omega == S.identity
    assert S.multiply(r, r, r) == omega_minus
    assert set(S.omega.period.tolist()) <= {1, 2, 4}


def test_omega_of_null_semigroup(gallery):
    S = gallery('Null')
    a = S.generator('a')
    assert omega_power(S, a)[0] == S.zero
    assert S.omega.index[a] == 2


def test_omega_iterate_swap_returns_start(gallery):
    S = gallery('S3')
    s, r = S.generator('s'), S.generator('r')
    assert omega_iterate(S, ('y2', 'y1'), (s, r), (s, r)) == (s, r)


def test_omega_iterate_reaches_zero(gallery):
    S = gallery('Null')
    a = S.generator('a')
    assert omega_iterate(S, ('y1 z1',), (a,), (a,)) == (S.zero,)


def test_omega_iterate_rejects_undeclared_variable(gallery):
    S = gallery('Null')
    with pytest.raises(SemanticError):
        omega_iterate(S, ('y3',), (0,), (0,))


def test_omega_limit_batch():
    F = np.array([[1, 2, 0], [1, 1, 1], [1, 0, 0]])
    G = omega_limit_batch(F)
    assert G[0].tolist() == [0, 1, 2]
    assert G[1].tolist() == [1, 1, 1]
    assert G[2].tolist() == [0, 1, 1]
