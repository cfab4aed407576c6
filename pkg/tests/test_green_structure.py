import numpy as np
import pytest

from errors import NotAGroup, NotRegular
from gallery import group_table
from green_structure import (block_group_failure, block_group_nil_failure, check_rees_law, egg_box_table,
                             gnil_by_phi, greens_structure, group_nilpotency_class, idempotents_commute,
                             inverse_counts, is_aperiodic, is_block_group_by_identity, is_inverse_semigroup,
                             maximal_subgroups, principal_series, rees_coordinatize, subgroup_classes)
from semigroup_core import from_table


def test_brandt_classes(gallery):
    S = gallery('Brandt 3')
    greens = greens_structure(S)
    assert greens.j_count == 2
    assert all(greens.regular)
    nonzero = greens.j_class[S.generator('m1')]
    assert len(greens.j_members[nonzero]) == 9
    assert greens.j_order[greens.j_class[S.zero], nonzero]
    assert not greens.j_order[nonzero, greens.j_class[S.zero]]


def test_principal_series_top_down(gallery):
    S = gallery('Brandt 3')
    series = principal_series(S)
    greens = greens_structure(S)
    assert len(series) == 2
    assert series.layers[-1] == greens.j_class[S.zero]
    assert series.ideals[0] == frozenset(range(S.size))
    assert series.below(0) == frozenset([S.zero])


def test_rees_coordinates_of_brandt(gallery):
    S = gallery('Brandt 3')
    J = int(greens_structure(S).j_class[S.generator('m1')])
    rees = rees_coordinatize(S, J)
    assert (rees.rows, rees.cols) == (3, 3)
    assert rees.is_inverse_square
    assert len(rees.group_elements) == 1
    assert np.array_equal(rees.sandwich, np.where(np.eye(3) > 0, 0, -1))
    assert check_rees_law(S, rees) is None


def test_rees_coordinates_of_group_layer(gallery):
    S = gallery('D4')
    rees = rees_coordinatize(S, 0)
    assert (rees.rows, rees.cols) == (1, 1)
    assert len(rees.group_elements) == 8
    assert check_rees_law(S, rees) is None


def test_non_regular_class_has_no_coordinates(gallery):
    S = gallery('Null')
    J = int(greens_structure(S).j_class[S.generator('a')])
    with pytest.raises(NotRegular):
        rees_coordinatize(S, J)


@pytest.mark.parametrize('name, params, expected', [
    ('C', (1,), 0),
    ('C', (6,), 1),
    ('D4', (), 2),
    ('Q8', (), 2),
    ('S3', (), None),
])
def test_group_nilpotency_class(name, params, expected):
    assert group_nilpotency_class(group_table(name, *params)) == expected


def test_group_nilpotency_class_needs_a_group():
    with pytest.raises(NotAGroup):
        group_nilpotency_class(np.array([[0, 0], [0, 0]]))


def test_phi_iteration_agrees_with_lower_central_series(gallery):
    for gid, nilpotent in (('D4', True), ('Q8', True), ('C 6', True), ('S3', False)):
        S = gallery(gid)
        assert gnil_by_phi(S, tuple(range(S.size))) == nilpotent


def test_brandt_is_aperiodic_inverse_block_group(gallery):
    S = gallery('Brandt 3')
    assert is_aperiodic(S)
    assert is_inverse_semigroup(S)
    assert idempotents_commute(S)
    assert inverse_counts(S).tolist() == [1] * S.size
    assert block_group_failure(S) is None
    assert is_block_group_by_identity(S)


def test_left_zero_band_is_not_a_block_group():
    S = from_table([[0, 0], [1, 1]])
    assert inverse_counts(S).tolist() == [2, 2]
    failure = block_group_failure(S)
    assert failure['inverses'] == 2
    assert not is_block_group_by_identity(S)


def test_non_nilpotent_subgroup_breaks_bg_nil(gallery):
    S = gallery('S3')
    assert block_group_failure(S) is None
    failure = block_group_nil_failure(S)
    assert failure['group_order'] == 6
    assert not is_aperiodic(S)


def test_subgroup_classes_of_n_family(gallery):
    S = gallery('N 3')
    orders = sorted(order for order, _ in subgroup_classes(S).values())
    assert 3 in orders
    assert all(klass is not None for _, klass in subgroup_classes(S).values())
    assert any(len(h) == 3 for _, h in maximal_subgroups(S))


def test_egg_box_table(gallery):
    S = gallery('Brandt 3')
    table = egg_box_table(S)
    assert list(table['size']) == [9, 1]
    assert list(table['r_classes']) == [3, 1]
    assert list(table['idempotents']) == [3, 1]
    assert list(table['group_order']) == [1, 1]
