"""Carathéodory-Pesin cover costs, critical alpha and the Pesin dimension.

With the 1-cylinder base cover a string of length l is an allowed word of l
system steps and X(U) is its cylinder, so a string cover of K is a complete
prefix antichain of the allowed-word tree.  The optimal cost

    M(N) = min over antichains with lengths in [N, Dmax] of sum exp(-alpha l^s)

satisfies C(v) = min(exp(-alpha l^s), sum over children C(child)) with forced
cuts at Dmax.  Subtrees whose roots share depth and automaton state are
isomorphic, so the program runs on (depth, state) pairs and yields M(N) for
every N from a single backward pass.

Systems that are not symbolic (finite spaces, contractions) use the
itinerary tree of a point sample with respect to a partition.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from . import kernels
from .dimension import DimensionEstimate
from .symbolic import Automaton, allowed_words, letter_matrices
from .systems import NdsSystem, SubsetSpec, SystemError, iterate

__all__ = [
    "StringCoverProblem",
    "PesinEvaluation",
    "CriticalAlpha",
    "PesinError",
    "cost_profile",
    "optimal_cover_cost",
    "critical_alpha",
    "pesin_dimension",
    "brute_force_cover_oracle",
    "itinerary_tree",
]

GROWTH_EPS = 1e-9
GROWTH_RATE = 2e-4
SENTINEL_TOL = 0.1


class PesinError(ValueError):
    """Invalid string-cover problem or inconclusive classification."""


@dataclass(frozen=True)
class StringCoverProblem:
    sys: NdsSystem
    K: SubsetSpec
    s: float
    alpha: float
    N: int
    Dmax: int
    base_depth: int = 1

    def __post_init__(self):
        if not 1 <= self.N <= self.Dmax:
            raise PesinError("need 1 <= N <= Dmax")
        if self.s <= 0:
            raise PesinError("s must be positive")
        if self.alpha < 0:
            raise PesinError("alpha must be nonnegative")


@dataclass(frozen=True)
class CriticalAlpha:
    """Critical alpha with an extended-real tag.

    ``kind`` is ``finite``, ``infinite`` or ``zero``; ``value`` is the
    bracket midpoint at the full scale in every case.  ``ratio`` compares
    the critical value at the full scale against half scale.
    """

    value: float
    kind: str
    bracket: tuple[float, float]
    ratio: float
    diagnostics: dict = field(default_factory=dict)

    @property
    def extended(self) -> float:
        if self.kind == "infinite":
            return float("inf")
        if self.kind == "zero":
            return 0.0
        return self.value


@dataclass
class PesinEvaluation:
    M_values: dict = field(default_factory=dict)
    critical_alpha: dict = field(default_factory=dict)
    critical_s: float | None = None
    diagnostics: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# the string tree
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _Tree:
    """Transition log multiplicities (D, Q, Q) and per-depth log node counts (D+1, Q)."""

    logT: np.ndarray
    logcnt: np.ndarray

    @property
    def depth(self) -> int:
        return self.logT.shape[0]


def _symbolic_tree(sys: NdsSystem, K: SubsetSpec, Dmax: int, base_depth: int = 1) -> _Tree:
    auto = Automaton(K, sys.phase.alphabet)
    if not auto.finite:
        raise PesinError("the cover program needs a finite-state subset")
    B = sys.block
    first = base_depth * B
    body = first + (Dmax - 1) * B
    Q = len(auto.states())
    mats = letter_matrices(auto, sys.letters(body + Q * B)).astype(float)
    # drop prefixes that die out: a state is live when it extends Q*B more letters
    live = np.ones(Q, dtype=bool)
    for p in range(mats.shape[0] - 1, -1, -1):
        mats[p][:, ~live] = 0.0
        live = mats[p].sum(axis=1) > 0
    T = np.empty((Dmax, Q, Q))
    pos = 0
    for l in range(Dmax):
        width = first if l == 0 else B
        M = np.eye(Q)
        for t in range(width):
            M = M @ mats[pos + t]
        pos += width
        T[l] = M
    with np.errstate(divide="ignore"):
        logT = np.log(T)
    v0 = np.full(Q, -np.inf)
    v0[0] = 0.0
    return _Tree(logT, kernels.log_forward(logT, v0))


def itinerary_tree(sys: NdsSystem, points, Dmax: int, cells: int = 16) -> _Tree:
    """Itinerary tree of a point sample for non-symbolic systems.

    Finite spaces use the partition into points; interval and circle phases
    use ``cells`` equal cells.  Each tree node is its own state, so the cost
    program runs unchanged on the explicit tree.
    """
    pts = np.asarray(points).ravel()
    traj = iterate(sys, pts, Dmax - 1)
    if sys.family == "finite":
        labels = traj.astype(np.int64)
    elif sys.family == "interval":
        labels = np.minimum((traj / sys.phase.diameter * cells).astype(np.int64), cells - 1)
    elif sys.family == "circle":
        labels = np.minimum((traj * cells).astype(np.int64), cells - 1)
    else:
        raise PesinError("symbolic systems use the automaton tree")
    node = np.zeros(len(pts), dtype=np.int64)
    levels = []
    for l in range(Dmax):
        key = node * (labels.max() + 1) + labels[:, l]
        uniq, child = np.unique(key, return_inverse=True)
        parents = uniq // (labels.max() + 1)
        levels.append(parents)
        node = child
    width = max(1, max(len(p) for p in levels))
    Q = width
    logT = np.full((Dmax, Q, Q), -np.inf)
    for l, parents in enumerate(levels):
        logT[l, parents, np.arange(len(parents))] = 0.0
    v0 = np.full(Q, -np.inf)
    v0[0] = 0.0
    return _Tree(logT, kernels.log_forward(logT, v0))


def _tree(sys: NdsSystem, K: SubsetSpec | None, Dmax: int, base_depth: int = 1) -> _Tree:
    K = K or SubsetSpec.whole()
    if sys.family == "symbolic":
        return _symbolic_tree(sys, K, Dmax, base_depth)
    if K.kind == "points":
        return itinerary_tree(sys, K.points, Dmax)
    if sys.family == "finite":
        return itinerary_tree(sys, np.arange(sys.phase.size), Dmax)
    raise PesinError("non-symbolic systems need a point-sample subset")


def cost_profile(sys: NdsSystem, K: SubsetSpec | None, s: float, alpha: float, Dmax: int,
                 base_depth: int = 1, tree: _Tree | None = None) -> np.ndarray:
    """log M(N) for N = 0..Dmax (entry 0 unused, -inf)."""
    tree = tree or _tree(sys, K, Dmax, base_depth)
    return kernels.cover_cost(tree.logT, tree.logcnt, s, alpha)


def optimal_cover_cost(p: StringCoverProblem) -> float:
    """Exact minimal string-cover cost for lengths in [N, Dmax]."""
    prof = cost_profile(p.sys, p.K, p.s, p.alpha, p.Dmax, p.base_depth)
    return float(np.exp(prof[p.N]))


# ---------------------------------------------------------------------------
# brute-force oracle
# ---------------------------------------------------------------------------

def brute_force_cover_oracle(sys: NdsSystem, K: SubsetSpec | None, s: float, alpha: float, N: int,
                             Dmax: int, redundant: bool = False) -> float:
    """Minimum cost over every complete antichain of allowed words, by enumeration.

    With ``redundant`` set, every family of words (antichain or not) that
    covers all depth-``Dmax`` words is enumerated instead.
    """
    K = K or SubsetSpec.whole()
    if sys.phase.alphabet > 2 or Dmax > 5:
        raise PesinError("oracle limited to alphabet 2 and Dmax <= 5")
    if sys.block != 1:
        raise PesinError("oracle works on one-letter steps")
    words = {l: allowed_words(sys, K, l) for l in range(1, Dmax + 1)}
    cost = {l: float(np.exp(-alpha * l ** s)) for l in range(1, Dmax + 1)}
    if redundant:
        return _redundant_oracle(words, cost, N, Dmax)
    children = {}
    for l in range(1, Dmax + 1):
        for w in words[l]:
            children.setdefault(w[:-1], []).append(w)

    def covers(w) -> np.ndarray:
        """Costs of all complete antichains below ``w``."""
        l = len(w)
        options = []
        if l >= N:
            options.append(np.array([cost[l]]))
        kids = children.get(w, [])
        if l < Dmax and kids:
            acc = np.array([0.0])
            for c in kids:
                acc = np.add.outer(acc, covers(c)).ravel()
            options.append(acc)
        if not kids and l < Dmax:
            options.append(np.array([0.0]))
        return np.concatenate(options) if options else np.array([np.inf])

    return float(covers(()).min())


def _redundant_oracle(words, cost, N, Dmax) -> float:
    pool = [(w, cost[len(w)]) for l in range(N, Dmax + 1) for w in words[l]]
    if len(pool) > 20:
        raise PesinError("too many words for subset enumeration")
    leaves = words[Dmax]
    if not leaves:
        return 0.0  # the empty family covers an empty subset
    masks = []
    for w, _ in pool:
        masks.append(sum(1 << i for i, u in enumerate(leaves) if u[: len(w)] == w))
    full = (1 << len(leaves)) - 1
    best = np.inf
    for r in range(1, len(pool) + 1):
        for combo in combinations(range(len(pool)), r):
            m = 0
            for i in combo:
                m |= masks[i]
            if m == full:
                best = min(best, sum(pool[i][1] for i in combo))
    return float(best)


# ---------------------------------------------------------------------------
# critical alpha
# ---------------------------------------------------------------------------

def _below(prof: np.ndarray, N_schedule: Sequence[int], alpha: float = 0.0, s: float = 1.0) -> tuple[bool, bool]:
    """(alpha below critical, increments consistent along the schedule).

    Below critical, log M(N) keeps growing at a rate comparable to the
    exponent gap; above it, finite-depth effects can still add a small,
    saturating amount.  The last segment must therefore rise by more than
    ``GROWTH_RATE * alpha * (N_k**s - N_{k-1}**s)``, which biases the
    critical value by at most a relative ``GROWTH_RATE``.
    """
    vals = np.array([prof[n] for n in N_schedule])
    n = np.asarray(N_schedule, dtype=float)
    need = GROWTH_RATE * alpha * np.diff(n ** s) + GROWTH_EPS * np.maximum(1.0, np.abs(vals[:-1]))
    rising = np.diff(vals) > need
    below = bool(rising[-1])
    consistent = bool(np.all(rising) or not np.any(rising[len(rising) // 2:]))
    return below, consistent


def _alpha_hi(tree: _Tree, s: float) -> float:
    from .kernels import _logsumexp_axis0

    tot = _logsumexp_axis0(tree.logcnt.T)
    l = np.arange(1, tree.depth + 1, dtype=float)
    rate = np.max(np.maximum(tot[1:], 0.0) / l ** s)
    return float(2.0 * rate + 1.0)


def _bisect_alpha(tree: _Tree, s: float, N_schedule, tol: float, rel_tol: float = 0.0):
    """Bracket for the critical alpha on one tree; also returns diagnostics."""
    hi = _alpha_hi(tree, s)
    lo = 0.0
    history = []
    consistent = True

    def below(a):
        nonlocal consistent
        prof = kernels.cover_cost(tree.logT, tree.logcnt, s, a)
        b, ok = _below(prof, N_schedule, a, s)
        consistent = consistent and ok
        history.append((a, tuple(float(prof[n]) for n in N_schedule)))
        return b

    if below(hi):
        return (hi, hi), {"hit": "alpha_hi", "consistent": consistent, "history": history}
    if rel_tol > 0:
        # geometric descent to a positive lower end, then geometric bisection
        a = hi
        while a > 1e-10:
            a /= 8
            if below(a):
                lo = a
                break
            hi = a
        if lo == 0:
            return (0.0, hi), {"consistent": consistent, "history": history}
        while hi / lo > 1 + rel_tol:
            mid = float(np.sqrt(lo * hi))
            if below(mid):
                lo = mid
            else:
                hi = mid
    else:
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if below(mid):
                lo = mid
            else:
                hi = mid
    return (lo, hi), {"consistent": consistent, "history": history}


def _monotone(history) -> bool:
    """M nonincreasing in alpha and nondecreasing in N along the recorded profiles."""
    h = sorted(history)
    for _, vals in h:
        if np.any(np.diff(vals) < -1e-9 * max(1.0, max(abs(v) for v in vals))):
            return False
    for (a1, v1), (a2, v2) in zip(h, h[1:]):
        if np.any(np.array(v2) > np.array(v1) + 1e-9 * max(1.0, np.max(np.abs(v1)))):
            return False
    return True


def critical_alpha(sys: NdsSystem, K: SubsetSpec | None = None, s: float = 1.0,
                   N_schedule: Sequence[int] = (4, 8, 16, 32), Dmax: int = 64, tol: float = 1e-3,
                   base_depth: int = 1, check_extrapolation: bool = True) -> CriticalAlpha:
    """Critical alpha of M(f, K, s, U, alpha) for the cylinder base cover.

    An alpha is below critical when the optimal cost still grows along
    ``N_schedule``.  The value is bisected at the full scale and at half
    scale; a ratio above ``1 + SENTINEL_TOL`` reports ``infinite``, below
    ``1 - SENTINEL_TOL`` (or a zero bracket) reports ``zero``.
    """
    N_schedule = tuple(int(n) for n in N_schedule)
    if Dmax < 2 * max(N_schedule):
        raise PesinError("Dmax must be at least twice the largest N")
    if tol <= 0:
        raise PesinError("tol must be positive")
    tree = _tree(sys, K, Dmax, base_depth)
    (lo, hi), diag = _bisect_alpha(tree, s, N_schedule, tol)
    half_sched = tuple(max(1, n // 2) for n in N_schedule)
    half_tree = _tree(sys, K, Dmax // 2, base_depth)
    (hlo, hhi), hdiag = _bisect_alpha(half_tree, s, half_sched, tol)
    value, half = 0.5 * (lo + hi), 0.5 * (hlo + hhi)
    ratio = value / half if half > 0 else (np.inf if value > 0 else 1.0)
    diagnostics = {"Dmax": Dmax, "N_schedule": N_schedule, "half_value": half,
                   "consistent": diag["consistent"] and hdiag["consistent"],
                   "monotone": _monotone(diag["history"]) and _monotone(hdiag["history"]),
                   "evaluations": len(diag["history"]) + len(hdiag["history"])}
    if _zero_growth(tree):
        return CriticalAlpha(value, "zero", (lo, hi), ratio, {**diagnostics, "zero_growth": True})
    if diag.get("hit") == "alpha_hi" or ratio > 1 + SENTINEL_TOL:
        kind = "infinite"
    elif hi <= tol or ratio < 1 - SENTINEL_TOL:
        kind = "zero"
    else:
        kind = "finite"
    if check_extrapolation and kind == "finite":
        deep = _tree(sys, K, 2 * Dmax, base_depth)
        flips = []
        for a in (lo, hi):
            b, _ = _below(kernels.cover_cost(deep.logT, deep.logcnt, s, a), N_schedule, a, s)
            flips.append(b != (a == lo))
        diagnostics["inconclusive"] = any(f for a, f in zip((lo, hi), flips) if a > 0)
    return CriticalAlpha(value, kind, (lo, hi), ratio, diagnostics)


def _zero_growth(tree: _Tree) -> bool:
    """Node counts bounded: the total at full depth equals the total at half depth."""
    from .kernels import _logsumexp_axis0

    tot = _logsumexp_axis0(tree.logcnt.T)
    D = tree.depth
    return bool(abs(tot[D] - tot[D // 2]) <= 1e-12 * max(1.0, abs(tot[D])))


# ---------------------------------------------------------------------------
# Pesin dimension
# ---------------------------------------------------------------------------

def _scale_slope(trees, s: float, rel_tol: float) -> tuple[float, list[float]]:
    """Slope of ln alpha_c against ln Dmax across the scales."""
    vals, depths = [], []
    for tree in trees:
        D = tree.depth
        sched = (D // 16, D // 8, D // 4, D // 2)
        (lo, hi), diag = _bisect_alpha(tree, s, sched, tol=1e-12, rel_tol=rel_tol)
        if diag.get("hit") == "alpha_hi":
            return np.inf, vals
        vals.append(0.5 * (lo + hi))
        depths.append(D)
    v = np.array(vals)
    if np.any(v <= 1e-10):
        return -np.inf, vals
    return float(np.polyfit(np.log(depths), np.log(v), 1)[0]), vals


def pesin_dimension(sys: NdsSystem, K: SubsetSpec | None = None, s_lo: float = 0.0, s_hi: float = 2.0,
                    width: float = 0.02, scales: Sequence[int] = (512, 1024, 2048, 4096),
                    base_depth: int = 1, rel_tol: float = 1e-4) -> DimensionEstimate:
    """Critical s where the Pesin s-entropy jumps from infinity to zero.

    At each s the critical alpha is bisected at several depths; s is below
    the dimension when it grows with the depth (toward infinity) and above
    when it shrinks (toward zero).  Bounded itinerary trees short-circuit to
    dimension 0.
    """
    scales = tuple(int(d) for d in scales)
    if min(scales) < 32:
        raise PesinError("scales must be at least 32")
    trees = [_tree(sys, K, D, base_depth) for D in scales]
    window = (min(scales), max(scales))
    if _zero_growth(trees[-1]):
        return DimensionEstimate(0.0, 0.0, "s-scan", window, 0.0, {}, zero_growth=True,
                                 diagnostics={"reason": "bounded string tree"})
    labels: dict[float, str] = {}
    slopes: dict[float, float] = {}

    def below(s):
        slope, _ = _scale_slope(trees, s, rel_tol)
        slopes[round(s, 6)] = slope
        labels[round(s, 6)] = "infinite" if slope > 0 else "zero"
        return slope > 0

    lo, hi = s_lo, s_hi
    if below(hi):
        lo = hi
    elif not below(max(lo, 1e-3)):
        hi = lo
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if below(mid):
            lo = mid
        else:
            hi = mid
    value = 0.5 * (lo + hi)
    return DimensionEstimate(value, value, "s-scan", window, 0.0, labels,
                             diagnostics={"bracket": (lo, hi), "slopes": slopes, "scales": scales})
