"""Time the numba kernels against their numpy fallbacks.

Both paths are called directly, so one process compares them regardless of
ENTRODIM_DISABLE_NUMBA.  Every pair is checked for equal output before it is
timed.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--quick]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from entrodim import kernels
from entrodim.covers import set_cover


def _best_of(fn, repeat):
    fn()  # warm-up (and JIT compile)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def _circle_traj(points, n, rng):
    x = np.sort(rng.random(points))
    rows = [x]
    for _ in range(n - 1):
        rows.append((2.0 * rows[-1]) % 1.0)
    return np.ascontiguousarray(np.stack(rows, axis=1))


def _tree(depth, states, rng):
    with np.errstate(divide="ignore"):
        logT = np.log(rng.integers(0, 3, size=(depth, states, states)).astype(float))
    logcnt = np.log(rng.integers(1, 4, size=(depth + 1, states)).astype(float))
    return np.ascontiguousarray(logT), np.ascontiguousarray(logcnt)


def cases(quick: bool):
    rng = np.random.default_rng(0)
    P = 800 if quick else 3000
    traj = _circle_traj(P, 6, rng)
    table = kernels._table(None)
    A = kernels.ball_matrix_loop(traj, kernels.CIRCLE, table, 0.05, 6, 1)
    ks = np.arange(1, 200_001 if quick else 2_000_001, dtype=np.int64)
    D = 512 if quick else 4096
    logT, logcnt = _tree(D, 4, rng)
    v0 = np.zeros(4)
    grid = np.arange(64) / 64.0
    ring = np.abs(grid[:, None] - grid[None, :])
    ring = np.minimum(ring, 1 - ring)
    masks = [sum(1 << int(k) for k in np.flatnonzero(row <= 2.5 / 64)) for row in ring]
    return [
        # raw float floors may differ near integers; the wrapper settles those exactly
        ("floor_power", lambda: _backend(True, kernels.floor_power, ks, 0.5),
         lambda: _backend(False, kernels.floor_power, ks, 0.5)),
        ("ball_matrix", lambda: kernels.ball_matrix_loop(traj, kernels.CIRCLE, table, 0.05, 6, 1),
         lambda: kernels.ball_matrix_numpy(traj, kernels.CIRCLE, table, 0.05, 6, 1)),
        ("greedy_separated", lambda: kernels.greedy_separated_loop(traj, kernels.CIRCLE, table, 0.05, 6, 1),
         lambda: kernels.greedy_separated_numpy(traj, kernels.CIRCLE, table, 0.05, 6, 1)),
        ("greedy_cover", lambda: kernels.greedy_cover_loop(A), lambda: kernels.greedy_cover_numpy(A)),
        ("log_forward", lambda: kernels.log_forward_loop(logT, v0), lambda: kernels.log_forward_numpy(logT, v0)),
        ("cover_cost", lambda: kernels.cover_cost_loop(logT, logcnt, 1.0, 0.9),
         lambda: kernels.cover_cost_numpy(logT, logcnt, 1.0, 0.9)),
        ("set_cover_64", lambda: _backend(True, set_cover, masks, (1 << 64) - 1, 10 ** 6),
         lambda: _backend(False, set_cover, masks, (1 << 64) - 1, 10 ** 6)),
    ]


def _backend(compiled, fn, *args):
    saved = kernels.BACKEND
    kernels.BACKEND = "numba" if compiled and kernels.HAS_NUMBA else "numpy"
    try:
        return fn(*args)
    finally:
        kernels.BACKEND = saved


def _same(a, b) -> bool:
    if isinstance(a, tuple) and not isinstance(a[0], (int, np.integer)):
        return all(_same(x, y) for x, y in zip(a, b))
    a, b = np.asarray(a), np.asarray(b)
    if a.dtype.kind == "f":
        return bool(np.allclose(a, b, rtol=1e-12, atol=1e-12, equal_nan=True))
    return bool(np.array_equal(a, b))


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--quick", action="store_true", help="smaller inputs")
    args = ap.parse_args(argv)
    if not kernels.HAS_NUMBA:
        print("numba unavailable or disabled: the loop kernels run as plain Python")
    print(f"{'kernel':<18}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}  agree")
    ok = True
    for name, fast, slow in cases(args.quick):
        agree = _same(fast(), slow())
        ok &= agree
        tf = _best_of(fast, args.repeat)
        ts = _best_of(slow, max(1, args.repeat // 2))
        print(f"{name:<18}{tf:>12.5f}{ts:>12.5f}{ts / tf:>10.1f}  {'yes' if agree else 'NO'}")
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
