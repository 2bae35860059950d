"""Nonautonomous systems: phase spaces, step schedules, derived systems, orbits.

A system is an immutable description of a sequence of self-maps f_1, f_2, ...
Every family keeps its per-step parameter in a :class:`Schedule` indexed by
*base steps*; derived systems (tails, powers, conjugates) only re-index
those steps, so nothing is ever materialised beyond the horizon asked for.

Families
--------
``circle``    x -> a_k x + t_k (mod 1) on the unit circle, integer a_k >= 1.
``interval``  x -> c x on [0, 1/2], 0 < c < 1.
``finite``    explicit map tables on a finite metric space.
``symbolic``  one-letter shift on the sequence space whose k-th coordinate
              takes ``b_k`` letters; ``b_k`` is the branching stream.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any, Callable, Sequence

import numpy as np

from .kernels import floor_power

__all__ = [
    "Circle",
    "Interval",
    "FiniteSpace",
    "SymbolicSpace",
    "Schedule",
    "Constant",
    "Periodic",
    "Intermittent",
    "SymbolPermutations",
    "Rotations",
    "NdsSystem",
    "SubsetSpec",
    "SystemError",
    "build_system",
    "orbit",
    "iterate",
    "power_system",
    "shift_system",
    "conjugate_system",
    "active_steps",
    "symbolic_model",
]


class SystemError(ValueError):
    """Invalid system descriptor or derived-system request."""


# ---------------------------------------------------------------------------
# phase spaces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Circle:
    kind: str = field(default="circle", init=False)
    diameter: float = field(default=0.5, init=False)

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all((x >= 0.0) & (x < 1.0)))

    def distance(self, x, y):
        d = np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))
        return np.minimum(d, 1.0 - d)


@dataclass(frozen=True)
class Interval:
    lo: float = 0.0
    hi: float = 0.5
    kind: str = field(default="interval", init=False)

    @property
    def diameter(self) -> float:
        return self.hi - self.lo

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all((x >= self.lo) & (x <= self.hi)))

    def distance(self, x, y):
        return np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))


@dataclass(frozen=True)
class FiniteSpace:
    dist: tuple[tuple[float, ...], ...]
    kind: str = field(default="finite", init=False)

    def __post_init__(self):
        D = np.asarray(self.dist, dtype=float)
        if D.ndim != 2 or D.shape[0] != D.shape[1] or D.shape[0] == 0:
            raise SystemError("distance table must be a nonempty square matrix")
        if np.any(np.diag(D) != 0) or np.any(D != D.T) or np.any(D[~np.eye(len(D), dtype=bool)] <= 0):
            raise SystemError("distance table is not a metric")
        if np.any(D[:, None, :] > D[:, :, None] + D[None, :, :] + 1e-12):
            raise SystemError("distance table violates the triangle inequality")

    @property
    def size(self) -> int:
        return len(self.dist)

    @property
    def table(self) -> np.ndarray:
        return np.asarray(self.dist, dtype=float)

    @property
    def diameter(self) -> float:
        return float(self.table.max())

    def contains(self, x) -> bool:
        x = np.asarray(x)
        return bool(np.all((x >= 0) & (x < self.size) & (x == np.floor(x))))

    def distance(self, x, y):
        return self.table[np.asarray(x, dtype=int), np.asarray(y, dtype=int)]


@dataclass(frozen=True)
class SymbolicSpace:
    alphabet: int
    kind: str = field(default="symbolic", init=False)
    diameter: float = field(default=1.0, init=False)

    def contains(self, x) -> bool:
        x = np.asarray(x)
        return bool(np.all((x >= 0) & (x < self.alphabet)))

    @staticmethod
    def distance(x, y):
        x = np.asarray(x)
        y = np.asarray(y)
        L = min(len(x), len(y))
        diff = np.flatnonzero(x[:L] != y[:L])
        return 0.0 if diff.size == 0 else 2.0 ** (-int(diff[0]))


# ---------------------------------------------------------------------------
# schedules (per base step parameter streams, k >= 1)
# ---------------------------------------------------------------------------

class Schedule:
    period: int | None = None

    def values(self, start: int, count: int) -> np.ndarray:
        raise NotImplementedError

    def at(self, k: int):
        return self.values(k, 1)[0]


@dataclass(frozen=True)
class Constant(Schedule):
    value: Any

    @property
    def period(self) -> int:
        return 1

    def values(self, start, count):
        return np.full(count, self.value, dtype=np.asarray(self.value).dtype)


@dataclass(frozen=True)
class Periodic(Schedule):
    block: tuple

    def __post_init__(self):
        if len(self.block) == 0:
            raise SystemError("periodic schedule needs a nonempty block")

    @property
    def period(self) -> int:
        return len(self.block)

    def values(self, start, count):
        idx = (np.arange(start, start + count) - 1) % len(self.block)
        return np.asarray(self.block)[idx]


@dataclass(frozen=True)
class Intermittent(Schedule):
    """``high`` at steps k with ``[k**s] > [(k-1)**s]``, ``low`` elsewhere."""

    exponent: Fraction
    high: int
    low: int = 1
    period: None = field(default=None, init=False)

    def active(self, start: int, count: int) -> np.ndarray:
        ks = np.arange(start - 1, start + count, dtype=np.int64)
        a = floor_power(ks, float(self.exponent), self.exponent)
        return a[1:] > a[:-1]

    def values(self, start, count):
        return np.where(self.active(start, count), self.high, self.low).astype(np.int64)


def active_steps(exponent, upto: int) -> list[int]:
    """Steps k in 1..upto with ``[k**s] > [(k-1)**s]``."""
    rule = Intermittent(Fraction(exponent).limit_denominator(10_000), 2)
    return [int(k) for k in np.flatnonzero(rule.active(1, upto)) + 1]


# ---------------------------------------------------------------------------
# conjugacies
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SymbolPermutations:
    """Per-step letter permutations pi_i, cycling through ``perms``."""

    perms: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        for p in self.perms:
            if sorted(p) != list(range(len(p))):
                raise SystemError(f"not a permutation: {p}")

    def at(self, i: int) -> np.ndarray:
        return np.asarray(self.perms[(i - 1) % len(self.perms)], dtype=np.int64)


@dataclass(frozen=True)
class Rotations:
    """Per-step rotations x -> x + theta_i.

    Either a cycling list ``thetas`` or, with ``multiplier`` set, the stream
    ``theta_i = multiplier**(i-1) * theta_1 (mod 1)``.
    """

    thetas: tuple[Fraction, ...]
    multiplier: int | None = None

    def at(self, i: int) -> Fraction:
        if self.multiplier is None:
            return Fraction(self.thetas[(i - 1) % len(self.thetas)]) % 1
        th = Fraction(self.thetas[0])
        q = th.denominator
        return Fraction(pow(self.multiplier, i - 1, q) * th.numerator % q, q)


@dataclass(frozen=True)
class _Layer:
    conj: Any
    first: int = 1
    stride: int = 1

    def at(self, j: int):
        return self.conj.at(self.first + (j - 1) * self.stride)

    def shifted(self, i: int) -> "_Layer":
        return replace(self, first=self.first + (i - 1) * self.stride)

    def powered(self, k: int) -> "_Layer":
        return replace(self, stride=self.stride * k)


# ---------------------------------------------------------------------------
# the system
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NdsSystem:
    """Immutable nonautonomous system.

    Step ``j`` of the system composes base steps
    ``offset + (j-1)*block + 1 .. offset + j*block`` of ``schedule``.
    """

    family: str
    phase: Any
    schedule: Schedule
    offset: int = 0
    block: int = 1
    layers: tuple[_Layer, ...] = ()
    tables: tuple[tuple[int, ...], ...] = ()
    period: int | None = None
    equicontinuous: bool = False
    label: str = ""

    # -- per-step structure -------------------------------------------------

    def base_range(self, j: int) -> range:
        start = self.offset + (j - 1) * self.block + 1
        return range(start, start + self.block)

    def base_values(self, count: int) -> np.ndarray:
        """Base-step parameters feeding system steps 1..count, shape (count, block)."""
        vals = self.schedule.values(self.offset + 1, count * self.block)
        return vals.reshape(count, self.block)

    def branching(self, n: int) -> np.ndarray:
        """Branching profile b_1..b_n (symbolic systems).

        For a power system the profile of step j is the product of the base
        branching over its block.
        """
        if self.family != "symbolic":
            raise SystemError("branching is defined for symbolic systems only")
        return np.prod(self.base_values(n).astype(object), axis=1)

    def log_branching(self, n: int) -> np.ndarray:
        if self.family != "symbolic":
            raise SystemError("branching is defined for symbolic systems only")
        return np.log(self.base_values(n).astype(float)).sum(axis=1)

    def letters(self, count: int) -> np.ndarray:
        """Letters available at the first ``count`` coordinates (symbolic)."""
        return np.asarray(self.schedule.values(self.offset + 1, count), dtype=np.int64)

    def affine(self, j: int) -> tuple[int, Fraction]:
        """Step j of a circle system as (multiplier, offset): x -> a x + t."""
        a, t = 1, Fraction(0)
        for k in self.base_range(j):
            ak = int(self.schedule.at(k))
            a, t = ak * a, ak * t
        for layer in self.layers:
            th_j, th_next = layer.at(j), layer.at(j + 1)
            t = (t + th_next - a * th_j) % 1
        return a, t % 1

    def contraction(self, j: int) -> float:
        c = 1.0
        for k in self.base_range(j):
            c *= float(self.schedule.at(k))
        return c

    def table(self, j: int) -> np.ndarray:
        idx = np.arange(self.phase.size)
        for k in self.base_range(j):
            t = np.asarray(self.tables[int(self.schedule.at(k))], dtype=np.int64)
            idx = t[idx]
        return idx

    def relabel(self, j: int) -> np.ndarray:
        """Letter permutation labelling coordinates at time j (pi_j)."""
        perm = np.arange(self.phase.alphabet)
        for layer in self.layers:
            perm = layer.at(j)[perm]
        return perm

    def maps(self, j: int) -> Callable:
        """The j-th map f_j as a vectorised callable."""
        if j < 1:
            raise SystemError("maps are indexed from 1")
        if self.family == "circle":
            a, t = self.affine(j)
            tf = float(t)
            return lambda x: np.mod(a * np.asarray(x, dtype=float) + tf, 1.0)
        if self.family == "interval":
            c = self.contraction(j)
            return lambda x: c * np.asarray(x, dtype=float)
        if self.family == "finite":
            t = self.table(j)
            return lambda x: t[np.asarray(x, dtype=np.int64)]
        if self.family == "symbolic":
            inv = np.argsort(self.relabel(j))
            nxt = self.relabel(j + 1)
            B = self.block
            return lambda w: nxt[inv[np.asarray(w, dtype=np.int64)[..., B:]]]
        raise SystemError(f"unknown family {self.family!r}")

    @property
    def symbolic_branching(self) -> Schedule | None:
        return self.schedule if self.family == "symbolic" else None


# ---------------------------------------------------------------------------
# subsets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SubsetSpec:
    """A subset K: whole space, factorial subshift (or union), or point sample."""

    kind: str = "whole"
    forbidden: tuple[tuple[int, ...], ...] = ()
    components: tuple["SubsetSpec", ...] = ()
    predicate: Callable | None = None
    points: Any = None
    invariant: bool = False

    @staticmethod
    def whole() -> "SubsetSpec":
        return SubsetSpec("whole", invariant=True)

    @staticmethod
    def subshift(forbidden: Sequence[Sequence[int] | str]) -> "SubsetSpec":
        words = tuple(tuple(int(c) for c in w) for w in forbidden)
        if any(len(w) == 0 for w in words):
            raise SystemError("empty forbidden word")
        return SubsetSpec("subshift", forbidden=words, invariant=True)

    @staticmethod
    def union(*parts: "SubsetSpec") -> "SubsetSpec":
        if not parts or any(p.kind != "subshift" for p in parts):
            raise SystemError("union needs subshift components")
        return SubsetSpec("union", components=tuple(parts), invariant=True)

    @staticmethod
    def language(predicate: Callable, check_depth: int = 6, alphabet: int = 2) -> "SubsetSpec":
        """Subshift given by a predicate on finite words; must be factorial."""
        from itertools import product

        for L in range(1, check_depth + 1):
            for w in product(range(alphabet), repeat=L):
                if predicate(w) and not all(predicate(w[:i]) for i in range(L)):
                    raise SystemError(f"predicate is not factorial: {w} allowed, a prefix is not")
        return SubsetSpec("language", predicate=predicate, invariant=True)

    @staticmethod
    def sample(points, invariant: bool = False) -> "SubsetSpec":
        pts = np.asarray(points)
        if pts.size == 0:
            raise SystemError("empty point sample")
        return SubsetSpec("points", points=pts, invariant=invariant)

    def check(self, phase) -> None:
        if self.kind == "points" and not phase.contains(self.points):
            raise SystemError("point sample is not contained in the phase space")
        if self.kind in ("subshift", "union", "language") and phase.kind != "symbolic":
            raise SystemError("subshift subsets need a symbolic phase space")


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------

def _exponent(value) -> Fraction:
    frac = Fraction(value).limit_denominator(10_000) if not isinstance(value, Fraction) else value
    if not 0 < frac <= 1:
        raise SystemError("schedule exponent must lie in (0, 1]")
    return frac


def _schedule_from(desc: dict, default_high: int) -> Schedule:
    rule = desc.get("rule", "constant")
    if rule == "constant":
        return Constant(int(desc.get("value", default_high)))
    if rule == "periodic":
        return Periodic(tuple(int(v) for v in desc["values"]))
    if rule == "intermittent":
        return Intermittent(_exponent(desc["exponent"]), int(desc.get("high", default_high)), int(desc.get("low", 1)))
    raise SystemError(f"unsupported schedule rule {rule!r}")


def _check_period(sys: NdsSystem) -> None:
    k = sys.period
    if k is None:
        return
    if k < 1:
        raise SystemError("period must be a positive integer")
    rng = np.random.default_rng(0)
    if sys.family in ("circle", "interval"):
        probe = rng.random(16) * (0.5 if sys.family == "interval" else 1.0)
    elif sys.family == "finite":
        probe = np.arange(sys.phase.size)
    else:
        probe = rng.integers(0, sys.phase.alphabet, size=(4, 4 * k + 8))
    for i in range(1, 2 * k + 1):
        if sys.family == "symbolic":
            same = np.array_equal(sys.letters(i + 4 * k)[i - 1 :], sys.letters(i + 5 * k)[i - 1 + k :])
            same = same and np.array_equal(sys.maps(i)(probe), sys.maps(i + k)(probe))
        else:
            same = np.array_equal(sys.maps(i)(probe), sys.maps(i + k)(probe))
        if not same:
            raise SystemError(f"declared period {k} but maps({i}) != maps({i + k})")


def build_system(spec: dict) -> NdsSystem:
    """Build a validated :class:`NdsSystem` from a descriptor mapping.

    Supported ``family`` values: ``full_shift``, ``symbolic``,
    ``intermittent_symbolic``, ``circle_multiply``, ``intermittent_circle``,
    ``contraction`` and ``finite``.  See the README for the key schema.
    """
    spec = dict(spec)
    family = spec.pop("family", None)
    period = spec.pop("period", None)
    label = spec.pop("label", family or "")
    if family == "full_shift":
        m = int(spec.get("alphabet", 2))
        sys = NdsSystem("symbolic", SymbolicSpace(m), Constant(m), equicontinuous=True, label=label)
    elif family == "symbolic":
        m = int(spec.get("alphabet", 2))
        sched = _schedule_from(spec.get("branching", {"rule": "constant", "value": m}), m)
        sys = NdsSystem("symbolic", SymbolicSpace(m), sched, equicontinuous=True, label=label)
    elif family == "intermittent_symbolic":
        m = int(spec.get("m", 2))
        sched = Intermittent(_exponent(spec["exponent"]), m)
        sys = NdsSystem("symbolic", SymbolicSpace(m), sched, equicontinuous=True, label=label)
    elif family == "circle_multiply":
        sched = _schedule_from(spec.get("schedule", {"rule": "constant", "value": spec.get("m", 2)}), int(spec.get("m", 2)))
        sys = NdsSystem("circle", Circle(), sched, equicontinuous=True, label=label)
    elif family == "intermittent_circle":
        m = int(spec.get("m", 2))
        sys = NdsSystem("circle", Circle(), Intermittent(_exponent(spec["exponent"]), m), equicontinuous=True, label=label)
    elif family == "contraction":
        c = float(spec.get("c", 0.5))
        if not 0 < c < 1:
            raise SystemError("contraction factor must lie in (0, 1)")
        sys = NdsSystem("interval", Interval(0.0, 0.5), Constant(c), equicontinuous=True, label=label)
    elif family == "finite":
        D = tuple(tuple(float(v) for v in row) for row in spec["distances"])
        phase = FiniteSpace(D)
        tables = tuple(tuple(int(v) for v in t) for t in spec["maps"])
        if not tables:
            raise SystemError("finite systems need at least one map table")
        for t in tables:
            if len(t) != phase.size or not all(0 <= v < phase.size for v in t):
                raise SystemError("map table does not map the space into itself")
        sys = NdsSystem("finite", phase, Periodic(tuple(range(len(tables)))), tables=tables,
                        equicontinuous=True, label=label)
    else:
        raise SystemError(f"unsupported system family {family!r}")

    if sys.family in ("symbolic", "circle"):
        probe = sys.schedule.values(1, 64)
        hi = sys.phase.alphabet if sys.family == "symbolic" else None
        if np.any(probe < 1) or (hi is not None and np.any(probe > hi)):
            raise SystemError("branching factor outside {1..m}" if hi else "multiplier must be >= 1")
    sys = replace(sys, period=int(period) if period is not None else sys.schedule.period)
    _check_period(sys)
    return sys


# ---------------------------------------------------------------------------
# derived systems
# ---------------------------------------------------------------------------

def power_system(sys: NdsSystem, k: int) -> NdsSystem:
    """f^k: the system whose j-th map is f_{(j-1)k+1}^k."""
    if k < 1:
        raise SystemError("power must be >= 1")
    period = None
    if sys.period is not None:
        period = sys.period // math.gcd(sys.period, k)
    return replace(sys, block=sys.block * k, layers=tuple(l.powered(k) for l in sys.layers),
                   period=period, label=f"{sys.label}^{k}")


def shift_system(sys: NdsSystem, i: int) -> NdsSystem:
    """The tail f_{i,inf} = (f_i, f_{i+1}, ...)."""
    if i < 1:
        raise SystemError("tail index must be >= 1")
    return replace(sys, offset=sys.offset + (i - 1) * sys.block,
                   layers=tuple(l.shifted(i) for l in sys.layers),
                   label=sys.label if i == 1 else f"{sys.label}[{i}:]")


def conjugate_system(sys: NdsSystem, conj) -> NdsSystem:
    """g_i = pi_{i+1} o f_i o pi_i^{-1} for an exact invertible stream pi_i."""
    if isinstance(conj, SymbolPermutations):
        if sys.family != "symbolic":
            raise SystemError("symbol permutations conjugate symbolic systems only")
        if any(len(p) != sys.phase.alphabet for p in conj.perms):
            raise SystemError("permutation size does not match the alphabet")
    elif isinstance(conj, Rotations):
        if sys.family != "circle":
            raise SystemError("rotations conjugate circle systems only")
    else:
        raise SystemError("conjugacy must be symbol permutations or rotations")
    return replace(sys, layers=sys.layers + (_Layer(conj),), period=None)


def symbolic_model(sys: NdsSystem) -> NdsSystem:
    """Coding of a circle multiplier system by its branching stream.

    Step k of x -> a_k x (mod 1) has ``a_k`` branches, so the cylinder
    counts of the coding are those of the symbolic system with b_k = a_k.
    Rotation conjugacies do not change the counts and are dropped.
    """
    if sys.family == "symbolic":
        return sys
    if sys.family != "circle":
        raise SystemError("only circle multiplier systems have a symbolic model")
    sched = sys.schedule
    m = int(getattr(sched, "high", 0) or np.max(sched.values(1, 4096)))
    return replace(sys, family="symbolic", phase=SymbolicSpace(m), layers=(), label=f"{sys.label}:coding")


# ---------------------------------------------------------------------------
# orbits
# ---------------------------------------------------------------------------

def orbit(sys: NdsSystem, x, n: int):
    """Trajectory (x, f_1 x, f_1^2 x, ..., f_1^n x).

    Geometric and finite systems return an array of length n+1.  Symbolic
    points are finite label words; element j is the (shorter) word seen at
    time j+1, so the word must have at least ``n*block`` letters.
    """
    if n < 0:
        raise SystemError("horizon must be >= 0")
    if sys.family == "symbolic":
        w = np.asarray(x, dtype=np.int64)
        if w.ndim != 1 or not sys.phase.contains(w):
            raise SystemError("point is not a word over the alphabet")
        if len(w) < n * sys.block:
            raise SystemError("word too short for the requested horizon")
        out = [w]
        for j in range(1, n + 1):
            out.append(sys.maps(j)(out[-1]))
        return out
    if not sys.phase.contains(x):
        raise SystemError("point outside the phase space")
    return iterate(sys, np.atleast_1d(x), n)[0]


def iterate(sys: NdsSystem, xs, n: int) -> np.ndarray:
    """Trajectory table of shape (len(xs), n+1) for non-symbolic systems."""
    if sys.family == "symbolic":
        raise SystemError("symbolic orbits are words; use orbit")
    dtype = np.int64 if sys.family == "finite" else float
    xs = np.asarray(xs, dtype=dtype)
    out = np.empty((len(xs), n + 1), dtype=dtype)
    out[:, 0] = xs
    for j in range(1, n + 1):
        out[:, j] = sys.maps(j)(out[:, j - 1])
    return out


def canonical_words(sys: NdsSystem, words) -> np.ndarray:
    """Map time-1 label words to the underlying canonical letters."""
    inv = np.argsort(sys.relabel(1))
    return inv[np.asarray(words, dtype=np.int64)]
