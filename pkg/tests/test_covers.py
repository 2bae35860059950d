from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import GOLDEN
from entrodim.covers import (ArcSet, CoverError, WordSet, arc, circle_cover, cylinder_cover, cylinder_depth,
                             dynamical_join, finite_cover, intersection_pairs, join, lebesgue_number,
                             min_subcover_count, pullback, refines, set_cover, symbolic_cover, whole_circle,
                             whole_cover)
from entrodim.systems import SubsetSpec, build_system

F = Fraction


def two_arcs():
    return circle_cover([arc(0, F(3, 5)), arc(F(1, 2), F(11, 10))])


def brute_cover(masks, universe):
    for k in range(1, len(masks) + 1):
        for combo in combinations(masks, k):
            u = 0
            for m in combo:
                u |= m
            if u & universe == universe:
                return k
    raise AssertionError("no cover")


def test_join_with_whole_is_identity():
    U = two_arcs()
    assert join(whole_cover("circle"), U).same_sets(U)


def test_two_arc_self_join():
    U = two_arcs()
    assert len(intersection_pairs(U, U)) == 4
    J = join(U, U)
    # both off-diagonal pairs give the same two-component overlap
    overlap = ArcSet(((F(0), F(1, 10)), (F(1, 2), F(3, 5))), False)
    assert set(J.elements) == {arc(0, F(3, 5)), arc(F(1, 2), F(11, 10)), overlap}


def test_cylinder_self_join_idempotent(full2):
    U = cylinder_cover(full2, 1)
    assert join(U, U).same_sets(U)


def test_join_mixed_kinds_rejected(full2):
    with pytest.raises(CoverError):
        join(two_arcs(), cylinder_cover(full2, 1))


def test_pullback_zero_steps(doubling):
    U = two_arcs()
    assert pullback(doubling, 1, 0, U).same_sets(U)


def test_pullback_doubling_half_arc():
    U = circle_cover([arc(0, F(1, 2)), arc(F(1, 4), F(5, 4))])
    dbl = build_system({"family": "circle_multiply", "m": 2})
    P = pullback(dbl, 1, 1, U)
    expected = ArcSet(((F(0), F(1, 4)), (F(1, 2), F(3, 4))), False)
    assert expected in P.elements


def test_pullback_keeps_interior_points():
    dbl = build_system({"family": "circle_multiply", "m": 2})
    a = arc(F(1, 2), F(3, 2))  # everything but 1/2
    pre = a.preimage(2, 0)
    assert pre.contains(F(1, 2)) and pre.contains(0)
    assert not pre.contains(F(1, 4)) and not pre.contains(F(3, 4))


def test_pullback_shift_cylinder(full2):
    U = symbolic_cover([WordSet(1, frozenset([(0,)])), WordSet(1, frozenset([(1,)]))], full2)
    P = pullback(full2, 1, 1, U)
    assert WordSet(2, frozenset([(0, 0), (1, 0)])) in P.elements


def test_dynamical_join_sizes(full2, intermittent_half):
    U = cylinder_cover(full2, 1)
    assert dynamical_join(full2, U, 1).same_sets(U)
    assert len(dynamical_join(full2, U, 3)) == 8
    V = cylinder_cover(intermittent_half, 1)
    assert len(dynamical_join(intermittent_half, V, 9)) == 8


def test_min_subcover_counts(full2):
    assert min_subcover_count(cylinder_cover(full2, 1), None, full2).value == 2
    U3 = cylinder_cover(full2, 3)
    assert min_subcover_count(U3, GOLDEN, full2).value == 5
    redundant = circle_cover([whole_circle(), arc(0, F(3, 5)), arc(F(1, 2), F(11, 10))])
    assert min_subcover_count(redundant).value == 1


def test_subcover_on_point_sample():
    U = two_arcs()
    K = SubsetSpec.sample(np.array([0.2, 0.3]))
    assert min_subcover_count(U, K).value == 1


def test_refines(full2):
    U, V = two_arcs(), circle_cover([arc(0, F(1, 2)), arc(F(1, 4), F(5, 4))])
    assert refines(U, join(U, V))
    assert refines(whole_cover("circle"), U)
    assert refines(cylinder_cover(full2, 1), cylinder_cover(full2, 2))
    assert not refines(cylinder_cover(full2, 2), cylinder_cover(full2, 1))


def test_lebesgue_numbers():
    d = lebesgue_number(two_arcs())
    assert 0 < d <= 0.1
    assert lebesgue_number(whole_cover("circle")) == pytest.approx(0.5)
    dist = np.array([[0, 0.2, 0.5], [0.2, 0, 0.3], [0.5, 0.3, 0]])
    d3 = lebesgue_number(finite_cover([[0], [1], [2]], 3), dist=dist)
    assert 0 < d3 <= 0.2


def test_cover_must_cover():
    with pytest.raises(CoverError):
        circle_cover([arc(0, F(1, 2))])
    with pytest.raises(CoverError):
        finite_cover([[0], [1]], 3)


def test_cylinder_depth(full2):
    assert cylinder_depth(cylinder_cover(full2, 3)) == 3
    assert cylinder_depth(whole_cover("symbolic", full2)) == 0
    assert cylinder_depth(two_arcs()) is None


def test_set_cover_hard_circulant():
    # balls {0, +-1, +-16} on Z_64: optimum is 16
    masks = []
    for c in range(64):
        m = 0
        for d in (0, 1, -1, 16, -16):
            m |= 1 << ((c + d) % 64)
        masks.append(m)
    value, exact = set_cover(masks, (1 << 64) - 1)
    assert exact and value == 16


@settings(max_examples=150, deadline=None)
@given(st.integers(2, 9), st.data())
def test_set_cover_matches_brute_force(size, data):
    k = data.draw(st.integers(1, 7))
    masks = [data.draw(st.integers(1, 2 ** size - 1)) for _ in range(k)]
    masks.append(1 << data.draw(st.integers(0, size - 1)))
    universe = 0
    for m in masks:
        universe |= m
    assert set_cover(masks, universe)[0] == brute_cover(masks, universe)


@settings(max_examples=100, deadline=None)
@given(st.integers(3, 7), st.data())
def test_join_submultiplicative_finite(size, data):
    def cover():
        n = data.draw(st.integers(1, 4))
        sets = [data.draw(st.sets(st.integers(0, size - 1), min_size=1)) for _ in range(n)]
        sets.append(set(range(size)) - set().union(*sets) or {0})
        return finite_cover(sets, size)

    U, V = cover(), cover()
    nU, nV = min_subcover_count(U).value, min_subcover_count(V).value
    J = join(U, V)
    assert min_subcover_count(J).value <= nU * nV
    assert refines(U, J) and refines(V, J)
    assert min_subcover_count(J).value >= max(nU, nV)
