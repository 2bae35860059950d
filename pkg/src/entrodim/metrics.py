"""Bowen metrics, separated/spanning counts on samples, exact cylinder counts."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from math import isfinite
from typing import Any

import numpy as np

from . import kernels
from .symbolic import Automaton, letter_matrices, log_cylinder_counts
from .systems import NdsSystem, SubsetSpec, SystemError, canonical_words, iterate

__all__ = [
    "CountRecord",
    "BowenContext",
    "bowen_distance",
    "circle_grid",
    "interval_grid",
    "word_sample",
    "trajectory_table",
    "max_separated_count",
    "min_spanning_count",
    "exact_cylinder_count",
    "log_word_counts",
    "is_spanning",
    "exhaustive_separated_count",
    "exhaustive_spanning_count",
]

EXACT_INT_LIMIT = 4096


@dataclass(frozen=True)
class CountRecord:
    """One count at horizon ``n``.

    ``value`` is an exact integer when known; ``log_value`` is always set.
    ``kind`` is ``exact``, ``lower`` (greedy separated) or ``upper`` (greedy
    spanning).
    """

    n: int
    epsilon: float
    value: int | None
    log_value: float
    kind: str
    count_type: str
    members: tuple = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        if self.value is not None and self.value < 1:
            raise ValueError("counts are at least 1")
        if not isfinite(self.log_value) or self.log_value < -1e-12:
            raise ValueError("log count must be finite and nonnegative")


# ---------------------------------------------------------------------------
# trajectories and distances
# ---------------------------------------------------------------------------

def _kind(sys: NdsSystem) -> int:
    return {"circle": kernels.CIRCLE, "interval": kernels.LINE, "finite": kernels.TABLE,
            "symbolic": kernels.SYMBOLIC}[sys.family]


def trajectory_table(sys: NdsSystem, points, n: int) -> tuple[np.ndarray, int, np.ndarray | None]:
    """(table, metric kind, distance table) for the kernels.

    Geometric rows hold ``x, f_1 x, ..., f_1^{n-1} x``; symbolic rows hold the
    canonical words themselves (distances come from first disagreements).
    """
    if n < 1:
        raise SystemError("horizon must be >= 1")
    kind = _kind(sys)
    if sys.family == "symbolic":
        words = canonical_words(sys, np.atleast_2d(points))
        return words.astype(np.float64), kind, None
    traj = iterate(sys, np.asarray(points).ravel(), n - 1)
    table = np.asarray(sys.phase.table) if sys.family == "finite" else None
    return traj.astype(np.float64), kind, table


def bowen_distance(sys: NdsSystem, x, y, n: int) -> float:
    """d_n(x, y) = max over 0 <= j < n of d(f_1^j x, f_1^j y)."""
    if n < 1:
        raise SystemError("horizon must be >= 1")
    if sys.family == "symbolic":
        x, y = np.asarray(x), np.asarray(y)
        if x.shape != y.shape:
            raise SystemError("symbolic points must be words of equal length")
        pts = np.stack([x, y])
    else:
        pts = np.array([x, y])
    traj, kind, table = trajectory_table(sys, pts, n)
    D = kernels._pair_distance_numpy(traj, np.array([0]), np.array([1]), kind,
                                     kernels._table(table), n, sys.block)
    return float(D[0, 0])


@dataclass
class BowenContext:
    """Trajectories of a fixed sample cached for repeated d_n queries."""

    sys: NdsSystem
    n: int
    points: Any
    traj: np.ndarray = field(init=False, repr=False)
    kind: int = field(init=False)
    table: Any = field(init=False, repr=False)

    def __post_init__(self):
        self.traj, self.kind, self.table = trajectory_table(self.sys, self.points, self.n)

    def __len__(self) -> int:
        return self.traj.shape[0]

    def distance(self, i: int, k: int) -> float:
        D = kernels._pair_distance_numpy(self.traj, np.array([i]), np.array([k]), self.kind,
                                         kernels._table(self.table), self.n, self.sys.block)
        return float(D[0, 0])

    def ball_matrix(self, eps: float) -> np.ndarray:
        return kernels.ball_matrix(self.traj, self.kind, eps, self.n, self.table, self.sys.block)


# ---------------------------------------------------------------------------
# samples
# ---------------------------------------------------------------------------

def circle_grid(resolution: int = 2 ** 16) -> SubsetSpec:
    """The grid {k / resolution} on the circle."""
    return SubsetSpec.sample(np.arange(resolution) / resolution)


def interval_grid(resolution: int = 2 ** 12, right: float = 0.5) -> SubsetSpec:
    """``resolution + 1`` equally spaced points of [0, right], invariant under x -> c x only at 0."""
    return SubsetSpec.sample(np.linspace(0.0, right, resolution + 1))


def word_sample(sys: NdsSystem, length: int, subset: SubsetSpec | None = None) -> SubsetSpec:
    """Every allowed canonical word of ``length`` letters, as time-1 labels."""
    from .symbolic import allowed_words

    words = np.array(allowed_words(sys, subset or SubsetSpec.whole(), length), dtype=np.int64)
    labels = sys.relabel(1)[words]
    return SubsetSpec.sample(labels, invariant=False)


def _sample_points(sys: NdsSystem, K: SubsetSpec):
    if K is None or K.kind != "points":
        if sys.family == "finite" and (K is None or K.kind == "whole"):
            return np.arange(sys.phase.size)
        raise SystemError("separated/spanning counts need a finite point sample")
    pts = np.asarray(K.points)
    if pts.size == 0:
        raise SystemError("empty sample")
    K.check(sys.phase)
    return pts


# ---------------------------------------------------------------------------
# counts
# ---------------------------------------------------------------------------

def max_separated_count(sys: NdsSystem, K: SubsetSpec, n: int, eps: float) -> CountRecord:
    """Greedy (n, eps)-separated subset of the sample, canonical order (lower bound for s_n)."""
    if eps <= 0:
        raise SystemError("epsilon must be positive")
    pts = _sample_points(sys, K)
    traj, kind, table = trajectory_table(sys, pts, n)
    kept = kernels.greedy_separated(traj, kind, eps, n, table, sys.block)
    v = int(len(kept))
    return CountRecord(n, float(eps), v, float(np.log(v)), "lower", "separated", tuple(int(i) for i in kept))


def min_spanning_count(sys: NdsSystem, K: SubsetSpec, n: int, eps: float) -> CountRecord:
    """Greedy max-coverage (n, eps)-spanning subset of the sample (upper bound for r_n)."""
    if eps <= 0:
        raise SystemError("epsilon must be positive")
    pts = _sample_points(sys, K)
    traj, kind, table = trajectory_table(sys, pts, n)
    A = kernels.ball_matrix(traj, kind, eps, n, table, sys.block)
    centers = kernels.greedy_cover(A)
    v = int(len(centers))
    return CountRecord(n, float(eps), v, float(np.log(v)), "upper", "spanning", tuple(int(i) for i in centers))


def is_spanning(sys: NdsSystem, K: SubsetSpec, centers, n: int, eps: float) -> bool:
    """Whether the sample points indexed by ``centers`` form an (n, eps)-spanning set of the sample."""
    pts = _sample_points(sys, K)
    traj, kind, table = trajectory_table(sys, pts, n)
    centers = np.asarray(centers, dtype=np.int64)
    D = kernels._pair_distance_numpy(traj, centers, np.arange(len(pts)), kind, kernels._table(table), n, sys.block)
    return bool(np.all(D.min(axis=0) <= eps))


def _int_cylinder_count(sys: NdsSystem, K: SubsetSpec, n: int) -> int:
    if K.kind == "whole":
        out = 1
        for b in sys.branching(n):
            out *= int(b)
        return out
    auto = Automaton(K, sys.phase.alphabet)
    Q = len(auto.states())
    B = sys.block
    mats = letter_matrices(auto, sys.letters((n + Q) * B)).astype(np.int64).astype(object)
    v = np.zeros(Q, dtype=object)
    v[0] = 1
    for p in range(n * B):
        v = v.dot(mats[p])
    alive = np.zeros(Q, dtype=object)
    alive[:] = 1
    for p in range((n + Q) * B - 1, n * B - 1, -1):
        alive = mats[p].dot(alive)
    return int(sum(v[q] for q in range(Q) if alive[q] > 0))


def exact_cylinder_count(sys: NdsSystem, K: SubsetSpec | None, n: int) -> CountRecord:
    """Number of nonempty length-n dynamical cylinders meeting K (1-cylinder cover)."""
    K = K or SubsetSpec.whole()
    if sys.family != "symbolic":
        raise SystemError("cylinder counts need a symbolic system")
    if n < 1:
        raise SystemError("horizon must be >= 1")
    logv = float(log_cylinder_counts(sys, K, [n])[0])
    if not np.isfinite(logv):
        raise SystemError("the subset has no allowed words (empty subshift)")
    value = None
    finite_auto = K.kind != "language"
    if K.kind == "whole" or (finite_auto and n <= EXACT_INT_LIMIT):
        value = _int_cylinder_count(sys, K, n)
    elif K.kind == "language":
        value = int(round(np.exp(logv)))
    return CountRecord(int(n), 2.0 ** -sys.block, value, max(logv, 0.0), "exact", "cylinder")


def log_word_counts(sys: NdsSystem, K: SubsetSpec | None, lengths) -> np.ndarray:
    """log number of allowed canonical words with the given numbers of letters."""
    letters_sys = replace(sys, block=1, layers=())
    return log_cylinder_counts(letters_sys, K or SubsetSpec.whole(), lengths)


# ---------------------------------------------------------------------------
# exhaustive optima on small samples (test oracles)
# ---------------------------------------------------------------------------

EXHAUSTIVE_MAX_POINTS = 64


def _closeness(sys: NdsSystem, K: SubsetSpec, n: int, eps: float) -> np.ndarray:
    pts = _sample_points(sys, K)
    if len(pts) > EXHAUSTIVE_MAX_POINTS:
        raise SystemError(f"exhaustive counts take at most {EXHAUSTIVE_MAX_POINTS} points")
    traj, kind, table = trajectory_table(sys, pts, n)
    return kernels.ball_matrix_numpy(traj, kind, kernels._table(table), float(eps), int(n), sys.block)


def exhaustive_separated_count(sys: NdsSystem, K: SubsetSpec, n: int, eps: float) -> int:
    """Exact maximal (n, eps)-separated subset size of a sample (branch and bound)."""
    A = _closeness(sys, K, n, eps)
    P = A.shape[0]
    nbr = [sum(1 << int(k) for k in np.flatnonzero(A[i])) for i in range(P)]
    memo: dict[int, int] = {}

    def best(cand: int) -> int:
        if cand == 0:
            return 0
        if cand in memo:
            return memo[cand]
        v = (cand & -cand).bit_length() - 1
        if nbr[v] & cand == 1 << v:
            out = 1 + best(cand & ~(1 << v))
        else:
            out = max(1 + best(cand & ~nbr[v]), best(cand & ~(1 << v)))
        memo[cand] = out
        return out

    return best((1 << P) - 1)


def exhaustive_spanning_count(sys: NdsSystem, K: SubsetSpec, n: int, eps: float) -> int:
    """Exact minimal (n, eps)-spanning subset size of a sample (sample centres)."""
    from .covers import set_cover

    A = _closeness(sys, K, n, eps)
    P = A.shape[0]
    masks = [sum(1 << int(k) for k in np.flatnonzero(A[i])) for i in range(P)]
    value, exact = set_cover(masks, (1 << P) - 1, exact_cap=P * P + 1)
    return value
