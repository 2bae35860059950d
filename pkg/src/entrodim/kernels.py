"""Hot numeric kernels, each with a numba loop path and a numpy path.

The loop versions (``*_loop``) are written in the nopython subset and are
compiled when numba is available.  The ``*_numpy`` versions are the fallback
selected by ``ENTRODIM_DISABLE_NUMBA=1``.  Public entry points dispatch on
:data:`BACKEND`.

Metric codes used by the Bowen kernels:

    0  circle of circumference 1, arc metric
    1  real line segment, absolute difference
    2  finite space, distance table lookup (trajectory entries are indices)
    3  symbolic words, ``d = 2**-(first disagreement)``; rows are words
"""
from __future__ import annotations

import math

import numpy as np

from ._accel import HAS_NUMBA, njit

BACKEND = "numba" if HAS_NUMBA else "numpy"

CIRCLE, LINE, TABLE, SYMBOLIC = 0, 1, 2, 3

_EDGE = 1e-9


# ---------------------------------------------------------------------------
# integer parts of powers
# ---------------------------------------------------------------------------

@njit
def floor_power_loop(ks, s):
    out = np.empty(ks.shape[0], dtype=np.int64)
    suspect = np.zeros(ks.shape[0], dtype=np.bool_)
    for i in range(ks.shape[0]):
        k = ks[i]
        if k <= 0:
            out[i] = 0
            continue
        v = math.exp(s * math.log(k))
        a = math.floor(v)
        out[i] = a
        frac = v - a
        if frac < _EDGE or frac > 1.0 - _EDGE:
            suspect[i] = True
    return out, suspect


def floor_power_numpy(ks, s):
    ks = np.asarray(ks, dtype=np.int64)
    with np.errstate(divide="ignore"):
        v = np.where(ks > 0, np.exp(s * np.log(np.maximum(ks, 1))), 0.0)
    a = np.floor(v)
    frac = v - a
    suspect = (ks > 0) & ((frac < _EDGE) | (frac > 1.0 - _EDGE))
    return a.astype(np.int64), suspect


def floor_power(ks, s, exact_exponent=None):
    """``[k**s]`` for an integer array, exact at integer boundaries.

    Floating evaluation is used everywhere except where ``k**s`` lies within
    1e-9 of an integer; those entries are settled by comparing integer
    powers ``a**q <= k**p`` with ``s = p/q`` (``exact_exponent``).
    """
    ks = np.ascontiguousarray(ks, dtype=np.int64)
    if BACKEND == "numba":
        out, suspect = floor_power_loop(ks, float(s))
    else:
        out, suspect = floor_power_numpy(ks, float(s))
    if suspect.any():
        p, q = _as_ratio(s, exact_exponent)
        for i in np.flatnonzero(suspect):
            k = int(ks[i])
            a = int(out[i])
            target = k ** p
            while a > 0 and a ** q > target:
                a -= 1
            while (a + 1) ** q <= target:
                a += 1
            out[i] = a
    return out


def _as_ratio(s, exact_exponent):
    from fractions import Fraction

    frac = Fraction(exact_exponent) if exact_exponent is not None else Fraction(s).limit_denominator(10_000)
    return frac.numerator, frac.denominator


# ---------------------------------------------------------------------------
# Bowen distances
# ---------------------------------------------------------------------------

@njit
def _far(traj, i, k, kind, table, eps, n, block):
    """True iff d_n(point i, point k) > eps."""
    if kind == 3:
        L = traj.shape[1]
        p = -1
        for c in range(L):
            if traj[i, c] != traj[k, c]:
                p = c
                break
        if p < 0:
            return False
        shift = p // block
        if shift > n - 1:
            shift = n - 1
        d = 2.0 ** (-(p - block * shift))
        return d > eps
    for j in range(n):
        a = traj[i, j]
        b = traj[k, j]
        if kind == 0:
            d = abs(a - b)
            if 1.0 - d < d:
                d = 1.0 - d
        elif kind == 1:
            d = abs(a - b)
        else:
            d = table[int(a), int(b)]
        if d > eps:
            return True
    return False


@njit
def greedy_separated_loop(traj, kind, table, eps, n, block):
    P = traj.shape[0]
    kept = np.empty(P, dtype=np.int64)
    nk = 0
    for i in range(P):
        ok = True
        for t in range(nk):
            if not _far(traj, i, kept[t], kind, table, eps, n, block):
                ok = False
                break
        if ok:
            kept[nk] = i
            nk += 1
    return kept[:nk]


def _pair_distance_numpy(traj, rows, cols, kind, table, n, block):
    """d_n between every (rows[a], cols[b]) pair; shape (len(rows), len(cols))."""
    A = traj[rows]
    B = traj[cols]
    if kind == SYMBOLIC:
        neq = A[:, None, :] != B[None, :, :]
        has = neq.any(axis=2)
        p = np.argmax(neq, axis=2)
        shift = np.minimum(p // block, n - 1)
        d = np.where(has, 2.0 ** (-(p - block * shift)), 0.0)
        return d
    A = A[:, :n]
    B = B[:, :n]
    if kind == TABLE:
        d = table[A.astype(np.int64)[:, None, :], B.astype(np.int64)[None, :, :]]
    else:
        d = np.abs(A[:, None, :] - B[None, :, :])
        if kind == CIRCLE:
            d = np.minimum(d, 1.0 - d)
    return d.max(axis=2)


def greedy_separated_numpy(traj, kind, table, eps, n, block):
    P = traj.shape[0]
    kept: list[int] = []
    for i in range(P):
        if kept:
            d = _pair_distance_numpy(traj, np.array([i]), np.array(kept), kind, table, n, block)[0]
            if np.any(d <= eps):
                continue
        kept.append(i)
    return np.array(kept, dtype=np.int64)


@njit
def ball_matrix_loop(traj, kind, table, eps, n, block):
    P = traj.shape[0]
    A = np.zeros((P, P), dtype=np.bool_)
    for i in range(P):
        A[i, i] = True
        for k in range(i + 1, P):
            if not _far(traj, i, k, kind, table, eps, n, block):
                A[i, k] = True
                A[k, i] = True
    return A


def ball_matrix_numpy(traj, kind, table, eps, n, block, chunk=256):
    P = traj.shape[0]
    A = np.zeros((P, P), dtype=bool)
    cols = np.arange(P)
    for start in range(0, P, chunk):
        rows = np.arange(start, min(P, start + chunk))
        A[rows] = _pair_distance_numpy(traj, rows, cols, kind, table, n, block) <= eps
    return A


@njit
def greedy_cover_loop(A):
    P = A.shape[0]
    cov = np.zeros(P, dtype=np.int64)
    for i in range(P):
        c = 0
        for j in range(P):
            if A[i, j]:
                c += 1
        cov[i] = c
    uncovered = np.ones(P, dtype=np.bool_)
    centers = np.empty(P, dtype=np.int64)
    nc = 0
    remaining = P
    while remaining > 0:
        best = 0
        for i in range(1, P):
            if cov[i] > cov[best]:
                best = i
        centers[nc] = best
        nc += 1
        for j in range(P):
            if A[best, j] and uncovered[j]:
                uncovered[j] = False
                remaining -= 1
                for i in range(P):
                    if A[i, j]:
                        cov[i] -= 1
    return centers[:nc]


def greedy_cover_numpy(A):
    A = np.asarray(A, dtype=bool)
    cov = A.sum(axis=1).astype(np.int64)
    uncovered = np.ones(A.shape[0], dtype=bool)
    centers: list[int] = []
    while uncovered.any():
        best = int(np.argmax(cov))
        centers.append(best)
        newly = A[best] & uncovered
        uncovered &= ~newly
        cov -= A[:, newly].sum(axis=1)
    return np.array(centers, dtype=np.int64)


def greedy_separated(traj, kind, eps, n, table=None, block=1):
    """Indices kept by the canonical-order greedy (n, eps)-separated pass."""
    traj = np.ascontiguousarray(traj, dtype=np.float64)
    table = _table(table)
    if BACKEND == "numba":
        return greedy_separated_loop(traj, kind, table, float(eps), int(n), int(block))
    return greedy_separated_numpy(traj, kind, table, float(eps), int(n), int(block))


def ball_matrix(traj, kind, eps, n, table=None, block=1):
    """Boolean matrix of closed Bowen-ball membership ``d_n(i, j) <= eps``."""
    traj = np.ascontiguousarray(traj, dtype=np.float64)
    table = _table(table)
    if BACKEND == "numba":
        return ball_matrix_loop(traj, kind, table, float(eps), int(n), int(block))
    return ball_matrix_numpy(traj, kind, table, float(eps), int(n), int(block))


def greedy_cover(A):
    """Max-coverage greedy on a ball matrix; ties go to the lowest index."""
    A = np.ascontiguousarray(A, dtype=np.bool_)
    if BACKEND == "numba":
        return greedy_cover_loop(A)
    return greedy_cover_numpy(A)


def _table(table):
    if table is None:
        return np.zeros((1, 1), dtype=np.float64)
    return np.ascontiguousarray(table, dtype=np.float64)


# ---------------------------------------------------------------------------
# transfer-matrix counting and the string-cover dynamic program
# ---------------------------------------------------------------------------

@njit
def log_forward_loop(logT, v0):
    D = logT.shape[0]
    Q = v0.shape[0]
    out = np.empty((D + 1, Q))
    for q in range(Q):
        out[0, q] = v0[q]
    for l in range(D):
        for q2 in range(Q):
            m = -np.inf
            for q in range(Q):
                t = out[l, q] + logT[l, q, q2]
                if t > m:
                    m = t
            if m == -np.inf:
                out[l + 1, q2] = -np.inf
                continue
            acc = 0.0
            for q in range(Q):
                t = out[l, q] + logT[l, q, q2]
                if t != -np.inf:
                    acc += math.exp(t - m)
            out[l + 1, q2] = m + math.log(acc)
    return out


def log_forward_numpy(logT, v0):
    D = logT.shape[0]
    out = np.empty((D + 1, v0.shape[0]))
    out[0] = v0
    with np.errstate(invalid="ignore"):
        for l in range(D):
            out[l + 1] = _logsumexp_axis0(out[l][:, None] + logT[l])
    return out


@njit
def cover_cost_loop(logT, logcnt, s, alpha):
    """Optimal string-cover cost for every minimal length N (log domain).

    ``logT[l]`` holds log multiplicities of transitions from depth ``l`` to
    depth ``l + 1``; ``logcnt[l]`` the log node counts per state at depth
    ``l``.  Entry ``N`` of the result is ``log M(N)``; entry 0 is unused.
    """
    D = logT.shape[0]
    Q = logT.shape[1]
    C = np.empty(Q)
    nxt = np.empty(Q)
    res = np.full(D + 1, -np.inf)
    cut = -alpha * D ** s
    for q in range(Q):
        C[q] = cut
    res[D] = _lse_sum(logcnt[D], C)
    for l in range(D - 1, 0, -1):
        cut = -alpha * l ** s
        for q in range(Q):
            m = -np.inf
            for q2 in range(Q):
                t = logT[l, q, q2] + C[q2]
                if t > m:
                    m = t
            if m == -np.inf:
                val = -np.inf
            else:
                acc = 0.0
                for q2 in range(Q):
                    t = logT[l, q, q2] + C[q2]
                    if t != -np.inf:
                        acc += math.exp(t - m)
                val = m + math.log(acc)
            nxt[q] = cut if cut < val else val
        for q in range(Q):
            C[q] = nxt[q]
        res[l] = _lse_sum(logcnt[l], C)
    return res


@njit
def _lse_sum(a, b):
    m = -np.inf
    for q in range(a.shape[0]):
        t = a[q] + b[q]
        if t > m:
            m = t
    if m == -np.inf:
        return -np.inf
    acc = 0.0
    for q in range(a.shape[0]):
        t = a[q] + b[q]
        if t != -np.inf:
            acc += math.exp(t - m)
    return m + math.log(acc)


def cover_cost_numpy(logT, logcnt, s, alpha):
    D = logT.shape[0]
    res = np.full(D + 1, -np.inf)
    C = np.full(logT.shape[1], -alpha * D ** s)
    res[D] = _logsumexp_axis0(logcnt[D] + C)
    with np.errstate(invalid="ignore"):
        for l in range(D - 1, 0, -1):
            val = _logsumexp_axis0((logT[l] + C[None, :]).T)
            C = np.minimum(-alpha * l ** s, val)
            res[l] = _logsumexp_axis0(logcnt[l] + C)
    return res


def _logsumexp_axis0(x):
    x = np.asarray(x, dtype=np.float64)
    m = np.max(x, axis=0)
    finite = np.isfinite(m)
    safe = np.where(finite, m, 0.0)
    with np.errstate(invalid="ignore", over="ignore"):
        acc = np.sum(np.where(np.isfinite(x), np.exp(x - safe), 0.0), axis=0)
        return np.where(finite, safe + np.log(np.where(finite, acc, 1.0)), -np.inf)


def log_forward(logT, v0):
    """Per-depth log node counts, row ``l`` after ``l`` transitions."""
    logT = np.ascontiguousarray(logT, dtype=np.float64)
    v0 = np.ascontiguousarray(v0, dtype=np.float64)
    if BACKEND == "numba":
        return log_forward_loop(logT, v0)
    return log_forward_numpy(logT, v0)


def cover_cost(logT, logcnt, s, alpha):
    """``log M(N)`` for ``N = 1..D`` from one backward pass (index ``N``)."""
    logT = np.ascontiguousarray(logT, dtype=np.float64)
    logcnt = np.ascontiguousarray(logcnt, dtype=np.float64)
    if BACKEND == "numba":
        return cover_cost_loop(logT, logcnt, float(s), float(alpha))
    return cover_cost_numpy(logT, logcnt, float(s), float(alpha))


# ---------------------------------------------------------------------------
# exact set cover on at most 64 elements
# ---------------------------------------------------------------------------

@njit
def _popcount64(x):
    c = 0
    one = np.uint64(1)
    zero = np.uint64(0)
    while x != zero:
        x &= x - one
        c += 1
    return c


@njit
def set_cover_loop(masks, n_elem, upper):
    """Minimum cover of elements ``0..n_elem-1`` by uint64 ``masks``; ``upper`` is a known cover size.

    Depth-first branch and bound: branch on the uncovered element with the
    fewest holders, prune by a packing bound (elements pairwise without a
    common holder each need their own set).
    """
    one = np.uint64(1)
    zero = np.uint64(0)
    M = masks.shape[0]
    count = np.zeros(n_elem, dtype=np.int64)
    for i in range(M):
        for e in range(n_elem):
            if (masks[i] >> np.uint64(e)) & one:
                count[e] += 1
    order = np.argsort(count, kind="mergesort")
    ptr = np.zeros(n_elem + 1, dtype=np.int64)
    for e in range(n_elem):
        ptr[e + 1] = ptr[e] + count[e]
    holders = np.empty(ptr[n_elem], dtype=np.int64)
    shared = np.zeros(n_elem, dtype=np.uint64)
    fill = ptr[:-1].copy()
    # holders of each element, widest first
    by_size = np.argsort(-np.array([_popcount64(masks[i]) for i in range(M)]), kind="mergesort")
    for r in range(M):
        i = by_size[r]
        for e in range(n_elem):
            if (masks[i] >> np.uint64(e)) & one:
                holders[fill[e]] = i
                fill[e] += 1
                shared[e] |= masks[i]
    if n_elem == 64:
        universe = ~zero
    else:
        universe = (one << np.uint64(n_elem)) - one
    best = upper
    unc = np.zeros(upper + 2, dtype=np.uint64)
    piv = np.zeros(upper + 2, dtype=np.int64)
    nxt = np.zeros(upper + 2, dtype=np.int64)
    unc[0] = universe
    d = 0
    fresh = True
    while d >= 0:
        if fresh:
            fresh = False
            u = unc[d]
            if u == zero:
                if d < best:
                    best = d
                d -= 1
                continue
            blocked = zero
            packing = 0
            pivot = -1
            for r in range(n_elem):
                e = order[r]
                bit = one << np.uint64(e)
                if u & bit:
                    if pivot < 0:
                        pivot = e
                    if not blocked & bit:
                        packing += 1
                        blocked |= shared[e]
            if d + packing >= best:
                d -= 1
                continue
            piv[d] = pivot
            nxt[d] = ptr[pivot]
        e = piv[d]
        if nxt[d] < ptr[e + 1]:
            m = masks[holders[nxt[d]]]
            nxt[d] += 1
            unc[d + 1] = unc[d] & ~m
            d += 1
            fresh = True
        else:
            d -= 1
    return best
