from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from entrodim.kernels import floor_power
from entrodim.systems import (Rotations, SubsetSpec, SymbolPermutations, SystemError, active_steps,
                              build_system, conjugate_system, iterate, orbit, power_system, shift_system,
                              symbolic_model)
from entrodim.metrics import exact_cylinder_count


def test_full_shift_constant_branching(full2):
    assert np.all(full2.branching(100) == 2)


def test_intermittent_active_steps(intermittent_circle_half):
    assert active_steps(0.5, 9) == [1, 4, 9]
    a = intermittent_circle_half.schedule.values(1, 9)
    assert [k for k in range(1, 10) if a[k - 1] == 2] == [1, 4, 9]


def test_finite_phase_cardinality(finite3):
    assert finite3.phase.size == 3


@pytest.mark.parametrize("spec", [
    {"family": "nope"},
    {"family": "contraction", "c": 1.5},
    {"family": "intermittent_circle", "exponent": 1.5},
    {"family": "symbolic", "alphabet": 2, "branching": {"rule": "periodic", "values": [3, 1]}},
    {"family": "finite", "distances": [[0, 1], [1, 0]], "maps": [[0, 2]]},
    {"family": "full_shift", "alphabet": 2, "period": 0},
    {"family": "symbolic", "alphabet": 2, "branching": {"rule": "periodic", "values": [2, 1]}, "period": 1},
])
def test_invalid_specs(spec):
    with pytest.raises(SystemError):
        build_system(spec)


def test_finite_metric_validated():
    with pytest.raises(SystemError):
        build_system({"family": "finite", "distances": [[0, 1, 5], [1, 0, 1], [5, 1, 0]], "maps": [[0, 1, 2]]})


def test_orbit_doubling(doubling):
    assert np.allclose(orbit(doubling, 0.1, 2), [0.1, 0.2, 0.4])
    assert np.all(orbit(doubling, 0.0, 7) == 0)


def test_orbit_intermittent(intermittent_circle_half):
    assert np.allclose(orbit(intermittent_circle_half, 0.3, 4), [0.3, 0.6, 0.6, 0.6, 0.2])


def test_orbit_rejects_outside(doubling):
    with pytest.raises(SystemError):
        orbit(doubling, 1.5, 2)


def test_power_identity(doubling, rng):
    x = rng.random(32)
    assert np.array_equal(iterate(power_system(doubling, 1), x, 5), iterate(doubling, x, 5))


def test_power_three_is_times_eight(doubling, rng):
    x = rng.random(64)
    step = power_system(doubling, 3).maps(1)
    assert np.allclose(step(x), np.mod(8 * x, 1.0))


def test_power_intermittent_branching(intermittent_half):
    sq = power_system(intermittent_half, 2)
    a = lambda n: int(np.floor(n ** 0.5 + 1e-12))
    for j in range(1, 40):
        got = int(np.prod(sq.base_values(j)[j - 1]))
        assert got == 2 ** (a(2 * j) - a(2 * j - 2))


def test_shift_identity_and_rotation():
    per = build_system({"family": "symbolic", "alphabet": 3, "branching": {"rule": "periodic", "values": [3, 1]}})
    assert shift_system(per, 1) == per
    assert list(shift_system(per, 2).branching(4)) == [1, 3, 1, 3]


def test_shift_intermittent(intermittent_half):
    tail = shift_system(intermittent_half, 5)
    b = tail.branching(5)
    assert [j for j in range(1, 6) if b[j - 1] == 2] == [5]


def test_identity_conjugacy_keeps_counts(full2):
    same = conjugate_system(full2, SymbolPermutations(((0, 1),)))
    for n in range(1, 8):
        assert exact_cylinder_count(same, None, n).value == exact_cylinder_count(full2, None, n).value


def test_swap_conjugacy_keeps_counts(full2):
    swap = conjugate_system(full2, SymbolPermutations(((1, 0),)))
    for n in range(1, 10):
        assert exact_cylinder_count(swap, None, n).value == 2 ** n


def test_rotation_conjugacy_of_doubling(doubling, rng):
    theta = Fraction(3, 64)
    g = conjugate_system(doubling, Rotations((theta,), multiplier=2))
    x = rng.random(64)
    for j in range(1, 5):
        assert np.allclose(np.mod(g.maps(j)(x) - np.mod(2 * x, 1.0) + 0.5, 1.0), 0.5, atol=1e-12)


def test_conjugacy_type_checks(doubling, full2):
    with pytest.raises(SystemError):
        conjugate_system(doubling, SymbolPermutations(((1, 0),)))
    with pytest.raises(SystemError):
        conjugate_system(full2, Rotations((Fraction(1, 3),)))


def test_symbolic_model(intermittent_circle_half, full2):
    model = symbolic_model(intermittent_circle_half)
    assert model.family == "symbolic"
    assert exact_cylinder_count(model, None, 9).value == 8
    assert symbolic_model(full2) is full2


def test_symbolic_orbit_drops_letters(full2):
    w = np.array([0, 1, 1, 0, 1])
    out = orbit(full2, w, 3)
    assert [list(v) for v in out] == [[0, 1, 1, 0, 1], [1, 1, 0, 1], [1, 0, 1], [0, 1]]


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 10 ** 7), st.sampled_from([Fraction(1, 2), Fraction(1, 3), Fraction(2, 3), Fraction(3, 10)]))
def test_floor_power_exact(k, s):
    # integer oracle: largest a with a**q <= k**p
    p, q = s.numerator, s.denominator
    a = int(floor_power(np.array([k]), float(s), s)[0])
    assert a ** q <= k ** p < (a + 1) ** q
