import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import GOLDEN, PHI
from entrodim.pesin import (PesinError, StringCoverProblem, brute_force_cover_oracle, cost_profile,
                            critical_alpha, optimal_cover_cost, pesin_dimension)
from entrodim.systems import SubsetSpec, build_system

LN2 = np.log(2)


def cost(sys, K, s, alpha, N, Dmax):
    return optimal_cover_cost(StringCoverProblem(sys, K or SubsetSpec.whole(), s, alpha, N, Dmax))


def test_kraft_equality(full2):
    assert cost(full2, None, 1.0, LN2, 1, 10) == pytest.approx(1.0, rel=1e-12)


def test_deepest_cut(full2):
    assert cost(full2, None, 1.0, 1.0, 1, 20) == pytest.approx(2.0 ** 20 * np.exp(-20), rel=1e-12)


def test_shallowest_cut(full2):
    assert cost(full2, None, 1.0, 0.5, 3, 20) == pytest.approx(8 * np.exp(-1.5), rel=1e-12)


def test_oracle_examples(full2):
    assert brute_force_cover_oracle(full2, None, 1.0, LN2, 1, 3) == pytest.approx(1.0, rel=1e-12)
    assert brute_force_cover_oracle(full2, None, 1.0, 1.0, 1, 3) == pytest.approx(8 * np.exp(-3), rel=1e-12)
    assert brute_force_cover_oracle(full2, GOLDEN, 1.0, 0.0, 1, 2) == pytest.approx(2.0)


def test_problem_validation(full2):
    with pytest.raises(PesinError):
        StringCoverProblem(full2, SubsetSpec.whole(), 1.0, 0.5, 5, 4)
    with pytest.raises(PesinError):
        StringCoverProblem(full2, SubsetSpec.whole(), 0.0, 0.5, 1, 4)
    with pytest.raises(PesinError):
        StringCoverProblem(full2, SubsetSpec.whole(), 1.0, -1.0, 1, 4)
    with pytest.raises(PesinError):
        critical_alpha(full2, None, 1.0, (4, 8, 16, 32), 40)


def test_cost_monotone(full2):
    profs = [cost_profile(full2, GOLDEN, 1.0, a, 32)[1:] for a in (0.2, 0.4, 0.6, 0.8)]
    for p in profs:
        assert np.all(np.diff(p) >= -1e-12)
    for p, q in zip(profs, profs[1:]):
        assert np.all(q <= p + 1e-12)


def test_critical_alpha_full_and_golden(full2):
    a = critical_alpha(full2, None, 1.0)
    assert a.kind == "finite" and abs(a.value - LN2) <= 1e-3
    g = critical_alpha(full2, GOLDEN, 1.0)
    assert g.kind == "finite" and abs(g.value - np.log(PHI)) <= 1e-3


def test_critical_alpha_infinite(full2):
    a = critical_alpha(full2, None, 0.5)
    assert a.kind == "infinite" and a.extended == np.inf


def test_critical_alpha_full_shift_alphabet3():
    f3 = build_system({"family": "full_shift", "alphabet": 3})
    assert abs(critical_alpha(f3, None, 1.0).value - np.log(3)) <= 1e-3


def test_pesin_dimension_full(full2):
    est = pesin_dimension(full2)
    assert abs(est.upper - 1) <= 0.02 and est.method == "s-scan"


def test_pesin_dimension_intermittent(intermittent_half):
    est = pesin_dimension(intermittent_half)
    assert 0 < est.upper <= 0.52


def test_pesin_dimension_single_branch():
    one = build_system({"family": "symbolic", "alphabet": 2, "branching": {"rule": "constant", "value": 1}})
    est = pesin_dimension(one)
    assert est.upper == 0 and est.zero_growth


def test_pesin_dimension_finite(finite3):
    est = pesin_dimension(finite3, SubsetSpec.whole())
    assert est.upper == 0 and est.zero_growth


forbidden = st.lists(st.lists(st.integers(0, 1), min_size=1, max_size=3), max_size=2)


@settings(max_examples=150, deadline=None)
@given(forbidden, st.sampled_from([0.5, 1.0, 1.5]), st.floats(0.0, 2.0), st.integers(1, 3), st.integers(3, 5))
def test_dp_matches_antichain_enumeration(words, s, alpha, N, Dmax):
    full2 = build_system({"family": "full_shift", "alphabet": 2})
    K = SubsetSpec.subshift(words) if words else SubsetSpec.whole()
    try:
        want = brute_force_cover_oracle(full2, K, s, alpha, N, Dmax)
    except PesinError:
        return  # empty language
    assert cost(full2, K, s, alpha, N, Dmax) == pytest.approx(want, rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(forbidden, st.floats(0.0, 2.0), st.integers(1, 2))
def test_antichains_are_optimal_among_all_covers(words, alpha, N):
    # redundant families (prefixes allowed) never beat an antichain
    full2 = build_system({"family": "full_shift", "alphabet": 2})
    K = SubsetSpec.subshift(words) if words else SubsetSpec.whole()
    try:
        anti = brute_force_cover_oracle(full2, K, 1.0, alpha, N, 3)
    except PesinError:
        return
    assert brute_force_cover_oracle(full2, K, 1.0, alpha, N, 3, redundant=True) == pytest.approx(anti, rel=1e-12)


def test_union_golden_and_forbid_00(full2):
    parts = [SubsetSpec.subshift(["11"]), SubsetSpec.subshift(["00"])]
    a = [critical_alpha(full2, K, 1.0).value for K in parts]
    u = critical_alpha(full2, SubsetSpec.union(*parts), 1.0).value
    assert abs(u - max(a)) <= 1e-3


def test_subset_monotone(full2):
    assert critical_alpha(full2, GOLDEN, 1.0).value <= critical_alpha(full2, None, 1.0).value


@pytest.mark.parametrize("m", [2, 3])
def test_s1_matches_classical_entropy(m):
    from entrodim.dimension import cylinder_series, geometric_horizons

    full = build_system({"family": "full_shift", "alphabet": m})
    htop = cylinder_series(full, None, geometric_horizons(1, 4096)).log_values[-1] / 4096
    assert abs(critical_alpha(full, None, 1.0).value - htop) <= 1e-3
    assert abs(htop - np.log(m)) < 1e-12


def test_depth_two_base_cover(full2):
    one = critical_alpha(full2, GOLDEN, 1.0).value
    two = critical_alpha(full2, GOLDEN, 1.0, base_depth=2).value
    assert abs(one - two) <= 1e-3
