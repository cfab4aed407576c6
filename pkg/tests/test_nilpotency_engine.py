import itertools
import math

import numpy as np
import pytest

from config import Budgets
from errors import BudgetExceeded, CapExceeded, MalformedRees
from gallery import build_rees, group_table, random_transformation_semigroup
from green_structure import NO_ENTRY, ReesDescription, block_group_nil_failure
from nilpotency_engine import (MEMBER, NOT_MEMBER, RotationWitness, TupleCycleWitness, check_mn,
                               check_mn_star, check_p2, check_smn, check_smn_circ_t, find_rotation_cycle,
                               find_swap_pattern, lambda_sequences, lambda_update_words, nilpotency_classes,
                               oracle_not_nilpotent, replay_rotation, replay_tuple_cycle, rees_fast_path,
                               rotation_links_hold, witness_regularity)
from semigroup_core import PartialMap, close_generators


def test_lambda_update_words_for_pairs():
    words = lambda_update_words(2)
    assert words[0] == 'y1 z1 y2 z2 y2 z1 y1'
    assert words[1] == 'y2 z1 y1 z2 y1 z1 y2'


def test_lambda_sequences_in_abelian_group(gallery):
    S = gallery('C 6')
    r = S.generator('r')
    r2 = S.multiply(r, r)
    trail = lambda_sequences(S, (r, r2), (r,))
    # x z y and y z x agree in a commutative group
    assert trail[1][0] == trail[1][1]


def test_lambda_sequences_needs_pairs(gallery):
    with pytest.raises(ValueError):
        lambda_sequences(gallery('C 6'), (0,), (0,))


@pytest.mark.parametrize('gid, mn_class', [('C 6', 1), ('D4', 2), ('Q8', 2), ('S3', math.inf)])
def test_group_classes_from_oracle(gallery, gid, mn_class):
    classes = nilpotency_classes(gallery(gid), t_max=4)
    assert classes.mn_class == mn_class
    assert classes.smn_class == mn_class


def test_oracle_witness_for_s3_replays(gallery):
    S = gallery('S3')
    witness = oracle_not_nilpotent(S, 'MN')
    assert isinstance(witness, TupleCycleWitness)
    assert witness.t == 2
    assert witness.distinct
    assert replay_tuple_cycle(S, witness)


def test_oracle_finds_nothing_in_nilpotent_group(gallery):
    assert oracle_not_nilpotent(gallery('D4'), 'SMN', t_max=3) is None


def test_oracle_budget(gallery):
    with pytest.raises(BudgetExceeded):
        oracle_not_nilpotent(gallery('D4'), 'SMN', t_max=4, budgets=Budgets(oracle_nodes=100))


def test_m3_fails_mn_with_c3_and_d3(gallery):
    S = gallery('M3')
    verdict = check_mn(S)
    assert verdict.status == NOT_MEMBER
    witness = verdict.witness
    assert isinstance(witness, RotationWitness)
    assert witness.t == 2
    assert {S.word_string(v) for v in witness.witnesses} == {'c3', 'd3'}
    assert rotation_links_hold(S, witness)
    assert witness_regularity(S, witness) == (False, False)
    cycle = replay_rotation(S, witness)
    assert cycle.distinct
    assert replay_tuple_cycle(S, cycle)


def test_m1_is_strongly_nilpotent(gallery):
    S = gallery('M1')
    assert check_mn(S).status == MEMBER
    assert check_smn(S).status == MEMBER


def test_m2_is_nilpotent_but_not_strongly(gallery):
    S = gallery('M2')
    assert check_mn(S).status == MEMBER
    verdict = check_smn(S)
    assert verdict.status == NOT_MEMBER
    assert verdict.witness.t >= 3
    assert rotation_links_hold(S, verdict.witness)
    assert replay_tuple_cycle(S, replay_rotation(S, verdict.witness))


@pytest.mark.parametrize('p', [2, 3])
def test_s_p_is_not_strongly_nilpotent(gallery, p):
    verdict = check_smn(gallery(f'Sp {p}'))
    assert verdict.status == NOT_MEMBER


@pytest.mark.parametrize('n', range(2, 9))
def test_n_family_parity(gallery, n):
    assert check_mn(gallery(f'N {n}')).is_member == (n % 2 == 1)


def test_non_nilpotent_group_fails_through_bg_nil(gallery):
    verdict = check_mn(gallery('S3'))
    assert verdict.status == NOT_MEMBER
    assert verdict.witness['kind'] == 'BGnilFailure'


def test_swap_pattern_on_plain_maps():
    w = PartialMap.from_pairs(3, [(1, 2), (2, 1)])
    v = PartialMap.from_pairs(3, [(1, 1), (2, 2)])
    alpha, beta, (x, y) = find_swap_pattern({0: w, 1: v})
    assert {alpha, beta} <= {(0, 1), (1, 0)}
    assert (x, y) == (0, 1)
    assert find_swap_pattern({0: v}) is None


def test_rotation_cycle_on_plain_maps():
    u = PartialMap.from_pairs(3, [(1, 1), (2, 2), (3, 3)])
    g = PartialMap.from_points([2, 3, 1])
    g2 = g.then(g)
    alpha, beta, witnesses = find_rotation_cycle({0: u, 1: g, 2: g2}, 3)
    assert len(alpha) == 3
    assert find_rotation_cycle({0: u, 1: g}, 3) is None


SLOW_GALLERY = [pytest.param(gid, marks=pytest.mark.slow) for gid in ('N1', 'N2', 'Example18')]

IDENTITY_GALLERY = ['M1', 'M2', 'M3', 'Brandt 3', 'Brandt 4', 'C 6', 'S3', 'D4', 'Q8', 'Null', 'Sp 2',
                    'N 3', 'N 4', 'N 5', 'SU 2,3,1', 'SU 2,1,3', 'SU 3,1,2'] + SLOW_GALLERY


@pytest.mark.parametrize('gid', IDENTITY_GALLERY)
def test_mn_star_with_bg_nil_matches_mn(gallery, gid):
    S = gallery(gid)
    if S.size > 60:
        pytest.skip("the MN* sweep covers members of at most 60 elements")
    combined = check_mn_star(S) and block_group_nil_failure(S) is None
    assert combined == check_mn(S).is_member


@pytest.mark.parametrize('gid', IDENTITY_GALLERY)
def test_smn_circ_2_matches_mn(gallery, gid):
    S = gallery(gid)
    if S.size > 25:
        pytest.skip("the SMN circ 2 sweep covers members of at most 25 elements")
    assert check_smn_circ_t(S, 2) == check_mn(S).is_member


def test_smn_circ_budget(gallery):
    with pytest.raises(BudgetExceeded):
        check_smn_circ_t(gallery('M3'), 2, budgets=Budgets(evaluations=10))


def _rees(group, params, rows, cols, entries):
    sandwich = np.full((cols, rows), NO_ENTRY, dtype=np.int64)
    for (j, i), g in entries.items():
        sandwich[j, i] = g
    return ReesDescription(group_table=group_table(group, *params), rows=rows, cols=cols, sandwich=sandwich)


def test_rees_fast_path():
    brandt = _rees('C', (1,), 2, 2, {(0, 0): 0, (1, 1): 0})
    assert rees_fast_path(brandt)['MN'].status == MEMBER
    rectangular = _rees('C', (1,), 2, 3, {(0, 0): 0, (1, 1): 0, (2, 1): 0})
    assert 'n != m' in rees_fast_path(rectangular)['SMN'].witness['violated']
    over_s3 = _rees('S3', (), 2, 2, {(0, 1): 3, (1, 0): 0})
    assert rees_fast_path(over_s3)['MN'].witness['violated'] == ['G is not nilpotent']


def test_rees_fast_path_rejects_empty_column():
    with pytest.raises(MalformedRees):
        rees_fast_path(_rees('C', (2,), 2, 2, {(0, 0): 1}))


def _random_rees(rng):
    group, params = [('C', (1,)), ('C', (2,)), ('C', (3,)), ('S3', ())][rng.integers(4)]
    G = group_table(group, *params)
    while True:
        rows, cols = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        if len(G) * rows * cols + 1 <= 30:
            break
    mask = rng.random((cols, rows)) < 0.5
    for j in range(cols):
        if not mask[j].any():
            mask[j, rng.integers(rows)] = True
    for i in range(rows):
        if not mask[:, i].any():
            mask[rng.integers(cols), i] = True
    sandwich = np.where(mask, rng.integers(0, len(G), size=(cols, rows)), NO_ENTRY)
    return ReesDescription(group_table=G, rows=rows, cols=cols, sandwich=sandwich)


def test_rees_fast_path_agrees_with_oracle():
    rng = np.random.default_rng(7)
    for _ in range(50):
        desc = _random_rees(rng)
        S = build_rees(desc)
        fast = rees_fast_path(desc)
        assert fast['MN'].is_member == (oracle_not_nilpotent(S, 'MN') is None)
        assert fast['MN'].is_member == check_mn(S).is_member
        assert fast['SMN'].is_member == check_smn(S).is_member


def _random_semigroups(rng, count, max_points, max_size):
    found = []
    while len(found) < count:
        points = int(rng.integers(2, max_points + 1))
        gens = int(rng.integers(1, 4))
        try:
            found.append(random_transformation_semigroup(rng, points, gens, cap=max_size))
        except CapExceeded:
            continue
    return found


def _assert_agrees_with_oracle(S, t_max):
    assert check_mn(S).is_member == (oracle_not_nilpotent(S, 'MN') is None)
    verdict = check_smn(S, t_max=t_max)
    oracle = oracle_not_nilpotent(S, 'SMN', t_max=t_max)
    if oracle is not None:
        assert verdict.status == NOT_MEMBER
        assert oracle.distinct
    if verdict.status == MEMBER:
        return
    witness = verdict.witness
    if isinstance(witness, RotationWitness):
        # a rotation longer than t_max is checked on its own replayed cycle
        assert replay_tuple_cycle(S, replay_rotation(S, witness))
        if witness.t <= t_max:
            assert oracle is not None
    elif isinstance(witness, TupleCycleWitness):
        assert replay_tuple_cycle(S, witness)
        assert oracle is not None
    else:
        assert oracle is not None


def test_checks_agree_with_oracle_on_random_semigroups():
    rng = np.random.default_rng(11)
    for S in _random_semigroups(rng, 30, 3, 20):
        _assert_agrees_with_oracle(S, t_max=3)


@pytest.mark.slow
def test_checks_agree_with_oracle_on_five_points():
    rng = np.random.default_rng(2024)
    for S in _random_semigroups(rng, 100, 5, 20):
        _assert_agrees_with_oracle(S, t_max=4)


def test_smn_oracle_reports_only_distinct_tuples():
    rng = np.random.default_rng(23)
    for S in _random_semigroups(rng, 30, 3, 16):
        witness = oracle_not_nilpotent(S, 'SMN', t_max=3)
        if witness is not None:
            assert witness.distinct
            assert replay_tuple_cycle(S, witness)


def test_smn_oracle_fallback_when_gamma_is_not_injective(gallery, monkeypatch):
    S = gallery('M3')
    monkeypatch.setattr(PartialMap, 'is_partial_injection', lambda self: False)
    verdict = check_smn(S)
    assert verdict.status == NOT_MEMBER
    assert isinstance(verdict.witness, TupleCycleWitness)
    assert verdict.witness.distinct
    assert replay_tuple_cycle(S, verdict.witness)


BG_NIL_GALLERY = ['Brandt 3', 'Brandt 4', 'M1', 'M2', 'M3', 'C 6', 'D4', 'Q8', 'Null', 'Sp 2',
                  'N 3', 'N 4', 'SU 2,3,1', 'SU 2,1,3']


def _assert_patterns_are_sound(S):
    mn = check_mn(S)
    if isinstance(mn.witness, RotationWitness):
        assert oracle_not_nilpotent(S, 'MN') is not None
    else:
        assert mn.is_member
        assert oracle_not_nilpotent(S, 'MN') is None
    smn = check_smn(S)
    if isinstance(smn.witness, RotationWitness):
        assert oracle_not_nilpotent(S, 'SMN', t_max=smn.witness.t) is not None


def test_patterns_are_sound_on_random_block_groups():
    rng = np.random.default_rng(17)
    for S in _random_semigroups(rng, 60, 3, 20):
        if block_group_nil_failure(S) is None:
            _assert_patterns_are_sound(S)


@pytest.mark.parametrize('gid', BG_NIL_GALLERY)
def test_patterns_are_sound_on_gallery(gallery, gid):
    S = gallery(gid)
    if S.size > 30:
        pytest.skip("oracle comparisons cover members of at most 30 elements")
    assert block_group_nil_failure(S) is None
    _assert_patterns_are_sound(S)


@pytest.mark.parametrize('gid', BG_NIL_GALLERY + [pytest.param('N1', marks=pytest.mark.slow)])
def test_p2_matches_mn_on_bg_nil_members(gallery, gid):
    S = gallery(gid)
    assert block_group_nil_failure(S) is None
    assert check_p2(S) == check_mn(S).is_member


@pytest.mark.parametrize('gid', ['Brandt 3', 'Brandt 4', 'M3', 'C 6', 'S3', 'D4', 'Q8', 'Null', 'Sp 2',
                                 'N 3', 'N 4', 'SU 2,3,1', 'SU 2,1,3'])
def test_gallery_members_agree_with_oracle(gallery, gid):
    S = gallery(gid)
    if S.size > 30:
        pytest.skip("oracle comparisons cover members of at most 30 elements")
    _assert_agrees_with_oracle(S, t_max=4)


@pytest.mark.slow
def test_three_generated_subsemigroups_of_s2_are_strongly_nilpotent(gallery):
    S = gallery('Sp 2')
    assert check_smn(S).status == NOT_MEMBER
    for chosen in itertools.combinations_with_replacement(range(S.size), 3):
        T = close_generators([S.elements[x] for x in chosen], check=False)
        assert check_smn(T).status == MEMBER, [S.word_string(x) for x in chosen]
