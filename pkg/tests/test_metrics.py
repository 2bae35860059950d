from itertools import combinations, product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import GOLDEN, PHI
from entrodim.metrics import (BowenContext, CountRecord, bowen_distance, circle_grid, exact_cylinder_count,
                              exhaustive_separated_count, exhaustive_spanning_count, is_spanning,
                              log_word_counts, max_separated_count, min_spanning_count)
from entrodim.systems import SubsetSpec, SystemError, build_system


def arc_d(x, y):
    d = abs(x - y) % 1.0
    return min(d, 1 - d)


def brute_bowen(sys, pts, n):
    orbs = [[x] for x in pts]
    for o in orbs:
        for j in range(1, n):
            o.append(float(sys.maps(j)(o[-1])))
    return np.array([[max(arc_d(a, b) for a, b in zip(p, q)) for q in orbs] for p in orbs])


def brute_separated(D, eps):
    P = len(D)
    for k in range(P, 0, -1):
        for c in combinations(range(P), k):
            if all(D[i, j] > eps for i, j in combinations(c, 2)):
                return k


def brute_spanning(D, eps):
    P = len(D)
    for k in range(1, P + 1):
        for c in combinations(range(P), k):
            if np.all((D[list(c)] <= eps).any(axis=0)):
                return k


def test_bowen_distance(doubling):
    assert bowen_distance(doubling, 0.3, 0.3, 5) == 0
    assert bowen_distance(doubling, 0.0, 0.1, 2) == pytest.approx(0.2)
    assert bowen_distance(doubling, 0.0, 0.1, 4) == pytest.approx(0.4)


def test_bowen_distance_symbolic(full2):
    assert bowen_distance(full2, [0, 1, 1, 0], [0, 1, 0, 0], 1) == 0.25
    # after one shift the disagreement sits at index 1
    assert bowen_distance(full2, [0, 1, 1, 0], [0, 1, 0, 0], 2) == 0.5


def test_separated_circle(doubling):
    assert max_separated_count(doubling, circle_grid(2 ** 12), 1, 0.3).value == 3


def test_separated_finite(finite3):
    for n in (1, 3, 7):
        assert max_separated_count(finite3, SubsetSpec.whole(), n, 0.1).value == 3


def test_spanning_circle(doubling):
    rec = min_spanning_count(doubling, circle_grid(2 ** 12), 1, 0.25)
    assert rec.value == 2 and rec.kind == "upper"
    assert is_spanning(doubling, circle_grid(2 ** 12), rec.members, 1, 0.25)


def test_spanning_identity_system():
    ident = build_system({"family": "finite", "distances": [[0, 1, 2, 3], [1, 0, 1, 2], [2, 1, 0, 1], [3, 2, 1, 0]],
                          "maps": [[0, 1, 2, 3]]})
    base = min_spanning_count(ident, SubsetSpec.whole(), 1, 1.0).value
    assert all(min_spanning_count(ident, SubsetSpec.whole(), n, 1.0).value == base for n in (2, 5, 9))


def test_doubling_64_grid_span(doubling):
    grid = circle_grid(64)
    opt = exhaustive_spanning_count(doubling, grid, 2, 0.26)
    greedy = min_spanning_count(doubling, grid, 2, 0.26).value
    assert opt <= greedy <= exhaustive_separated_count(doubling, grid, 2, 0.26)


def test_doubling_64_grid_sep(doubling):
    grid = circle_grid(64)
    opt = exhaustive_separated_count(doubling, grid, 3, 0.3)
    assert max_separated_count(doubling, grid, 3, 0.3).value <= opt
    assert opt >= 8 * max_separated_count(doubling, grid, 1, 0.3).value // 3


def test_exhaustive_limit(doubling):
    with pytest.raises(SystemError):
        exhaustive_separated_count(doubling, circle_grid(65), 1, 0.1)


@settings(max_examples=60, deadline=None)
@given(st.integers(4, 11), st.integers(1, 3), st.sampled_from([0.05, 0.1, 0.2, 0.3]),
       st.lists(st.integers(1, 3), min_size=1, max_size=3))
def test_exhaustive_counts_match_brute_force(P, n, eps, sched):
    sys = build_system({"family": "circle_multiply", "schedule": {"rule": "periodic", "values": sched}})
    pts = np.arange(P) / P
    K = SubsetSpec.sample(pts)
    D = brute_bowen(sys, list(pts), n)
    assert exhaustive_separated_count(sys, K, n, eps) == brute_separated(D, eps)
    assert exhaustive_spanning_count(sys, K, n, eps) == brute_spanning(D, eps)
    ctx = BowenContext(sys, n, pts)
    assert np.array_equal(ctx.ball_matrix(eps), D <= eps)


def test_exact_cylinder_counts(full2, intermittent_half):
    assert exact_cylinder_count(full2, None, 3).value == 8
    assert exact_cylinder_count(full2, GOLDEN, 3).value == 5
    assert exact_cylinder_count(intermittent_half, None, 9).value == 8
    assert exact_cylinder_count(full2, None, 200).value == 2 ** 200


def test_golden_growth(full2):
    v = log_word_counts(full2, GOLDEN, [1000, 2000])
    assert (v[1] - v[0]) / 1000 == pytest.approx(np.log(PHI), abs=1e-9)


def test_count_record_validation():
    with pytest.raises(ValueError):
        CountRecord(1, 0.1, 0, 0.0, "exact", "cylinder")


@settings(max_examples=80, deadline=None)
@given(st.integers(2, 3), st.data())
def test_word_counts_match_enumeration(m, data):
    forbidden = data.draw(st.lists(st.lists(st.integers(0, m - 1), min_size=1, max_size=3), min_size=1, max_size=3))
    K = SubsetSpec.subshift(forbidden)
    sys = build_system({"family": "full_shift", "alphabet": m})
    L = data.draw(st.integers(1, 7))

    def ok(w):
        s = "".join(map(str, w))
        return not any("".join(map(str, f)) in s for f in forbidden)

    # words of length L that extend to length L + 8 (the subshift language)
    def extendable(w, depth):
        if depth == 0:
            return True
        return any(ok(w + (a,)) and extendable((w + (a,))[-3:], depth - 1) for a in range(m))

    # m**2 suffix states, so extending m**2 + 1 letters forces a cycle
    words = [w for w in product(range(m), repeat=L) if ok(w) and extendable(w[-3:], m * m + 1)]
    if not words:
        with pytest.raises(SystemError):
            exact_cylinder_count(sys, K, L)
    else:
        assert exact_cylinder_count(sys, K, L).value == len(words)
