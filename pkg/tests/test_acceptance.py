"""Acceptance criteria 1-8, one PASS/FAIL line each."""
import hashlib
import time

import numpy as np
import pytest

from entrodim.dimension import cylinder_series, estimate_dimension, geometric_horizons, s_entropy
from entrodim.harness import property_suite, reproduce_section4
from entrodim.metrics import exact_cylinder_count
from entrodim.pesin import StringCoverProblem, brute_force_cover_oracle, critical_alpha, optimal_cover_cost
from entrodim.systems import SubsetSpec, build_system, symbolic_model

LN2 = np.log(2)
PHI = (1 + 5 ** 0.5) / 2
GOLDEN = SubsetSpec.subshift(["11"])


@pytest.fixture
def report(capsys):
    def emit(k, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {k}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail
    return emit


@pytest.fixture(scope="module")
def section4():
    return {r["system"]: r for r in reproduce_section4(None, threads=1).table}


def test_criterion_1_full_shift(report):
    t0 = time.perf_counter()
    full = build_system({"family": "full_shift", "alphabet": 2})
    h = geometric_horizons(1, 2 ** 14)
    series = cylinder_series(full, None, h)
    exact_ok = all(exact_cylinder_count(full, None, int(n)).value == 2 ** int(n) for n in h)
    exact_ok &= bool(np.all(np.abs(series.log_values - h * LN2) <= 1e-9 * h))
    est = estimate_dimension(series)
    up, lo = s_entropy(series, 1.0)
    dt = time.perf_counter() - t0
    ok = (exact_ok and abs(est.upper - 1) <= 0.05 and abs(est.lower - 1) <= 0.05
          and abs(up - LN2) <= 1e-6 and abs(lo - LN2) <= 1e-6 and dt < 30)
    report(1, ok, f"upper={est.upper:.6f} lower={est.lower:.6f} tail={up:.12f} exact={exact_ok} t={dt:.2f}s")


def test_criterion_2_intermittent(report):
    t0 = time.perf_counter()
    h = geometric_horizons(1, 10 ** 6)
    vals, closed = [], True
    for sigma in (0.3, 0.5, 0.7):
        circ = build_system({"family": "intermittent_circle", "m": 2, "exponent": sigma})
        series = cylinder_series(symbolic_model(circ), None, h)
        # closed form: log N(n) = [n^sigma] ln 2
        a = np.array([int(np.floor(float(n) ** sigma + 1e-9)) for n in h])
        closed &= bool(np.allclose(series.log_values, a * LN2, rtol=1e-12, atol=1e-9))
        vals.append(estimate_dimension(series).upper)
    dt = time.perf_counter() - t0
    ok = closed and all(abs(v - s) <= 0.05 for v, s in zip(vals, (0.3, 0.5, 0.7))) and dt < 60
    report(2, ok, f"estimates={[round(v, 4) for v in vals]} closed_form={closed} t={dt:.2f}s")


def test_criterion_3_critical_alpha(report):
    full = build_system({"family": "full_shift", "alphabet": 2})
    out = []
    for K, target in ((None, LN2), (GOLDEN, np.log(PHI))):
        t0 = time.perf_counter()
        a = critical_alpha(full, K, 1.0, (4, 8, 16, 32), 64)
        out.append((a.value, abs(a.value - target), time.perf_counter() - t0, a.kind))
    ok = all(err <= 1e-3 and dt < 10 and kind == "finite" for _, err, dt, kind in out)
    report(3, ok, "; ".join(f"alpha={v:.6f} err={e:.2e} t={dt:.2f}s" for v, e, dt, _ in out))


def test_criterion_4_pesin_dimension(report, section4):
    full, half = section4["full-2-shift"], section4["intermittent-0.5"]
    chain = []
    for name, r in section4.items():
        chain.append((name, r["pesin"] <= r["classical_lower"] + 0.05 and r["classical_lower"] <= r["classical_upper"] + 0.05))
    ok = abs(full["pesin"] - 1) <= 0.02 and 0 < half["pesin"] <= 0.52 and all(c for _, c in chain)
    report(4, ok, f"full={full['pesin']:.4f} intermittent-0.5={half['pesin']:.4f} "
                  f"chain={'ok' if all(c for _, c in chain) else [n for n, c in chain if not c]}")


def test_criterion_5_degenerate(report, section4):
    rows = [section4["finite-3"], section4["contraction-0.5"]]
    ok = all(r["htop"] <= 1e-6 and r["classical_upper"] == 0 and r["classical_lower"] == 0 and r["pesin"] == 0
             and r["zero_growth"] for r in rows)
    report(5, ok, "; ".join(f"{r['system']}: htop={r['htop']} dims=({r['classical_upper']}, {r['classical_lower']}, "
                            f"{r['pesin']}) zero_growth={r['zero_growth']}" for r in rows))


def test_criterion_6_oracle_grid(report):
    full = build_system({"family": "full_shift", "alphabet": 2})
    alphas = np.linspace(0.0, 1.8, 10)
    bad, total = [], 0
    for K in (SubsetSpec.whole(), GOLDEN):
        for s in (0.5, 1.0, 1.5):
            for a in alphas:
                for N in (1, 2):
                    for D in (3, 4, 5):
                        dp = optimal_cover_cost(StringCoverProblem(full, K, s, float(a), N, D))
                        bf = brute_force_cover_oracle(full, K, s, float(a), N, D)
                        total += 1
                        if abs(dp - bf) > 1e-12 * max(abs(bf), 1e-300):
                            bad.append((K.kind, s, a, N, D, dp, bf))
    report(6, not bad, f"{total} cases, {len(bad)} discrepancies")


def test_criterion_7_property_suite(report):
    t0 = time.perf_counter()
    r = property_suite(seed=1, trials=200)
    checks = r.estimates["checks"]
    detail = ", ".join(f"{k}:{v['passed']}/{v['passed'] + v['failed']}" for k, v in sorted(checks.items()))
    report(7, not r.failures, f"{len(r.failures)} failures in {time.perf_counter() - t0:.1f}s [{detail}]")


def test_criterion_8_determinism(report, tmp_path):
    digests = {}
    for t in (1, 2, 8):
        out = tmp_path / f"t{t}"
        reproduce_section4(out, threads=t)
        digests[t] = tuple(hashlib.sha256((out / n).read_bytes()).hexdigest() for n in ("section4.csv", "report.json"))
    ok = len(set(digests.values())) == 1
    report(8, ok, f"section4.csv/report.json sha256 {'identical' if ok else 'differ'} across threads 1, 2, 8")
