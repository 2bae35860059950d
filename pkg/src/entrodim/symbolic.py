"""Languages of symbolic subsets: automata, transfer matrices, word enumeration.

A subset K of a symbolic system is handled through a deterministic
automaton on canonical letters.  Whole space has one state; a
forbidden-word subshift tracks the last ``w - 1`` letters; a union runs its
components in parallel.  Combined with the per-coordinate letter counts of
the system this gives, per system step, a nonnegative integer transition
matrix whose products count allowed cylinders.
"""
from __future__ import annotations

from functools import lru_cache
from itertools import product

import numpy as np

from . import kernels
from .systems import NdsSystem, SubsetSpec, SystemError

__all__ = [
    "Automaton",
    "letter_matrices",
    "step_log_matrices",
    "log_cylinder_counts",
    "allowed_words",
    "all_words",
]

DEAD = None


class Automaton:
    """Deterministic automaton of a factorial language (dead state = ``None``)."""

    def __init__(self, subset: SubsetSpec, alphabet: int):
        self.subset = subset
        self.alphabet = alphabet
        kind = subset.kind
        if kind in ("whole", "points"):
            self.start = ()
            self._step = lambda q, a: ()
        elif kind == "subshift":
            self.start, self._step = _forbidden_automaton(subset.forbidden)
        elif kind == "union":
            parts = [_forbidden_automaton(c.forbidden) for c in subset.components]
            self.start = tuple(p[0] for p in parts)

            def step(q, a, parts=parts):
                nxt = tuple(DEAD if qi is DEAD else p[1](qi, a) for qi, p in zip(q, parts))
                return DEAD if all(v is DEAD for v in nxt) else nxt

            self._step = step
        elif kind == "language":
            pred = subset.predicate
            self.start = ()
            self._step = lambda q, a: (q + (a,)) if pred(q + (a,)) else DEAD
        else:
            raise SystemError(f"unsupported subset kind {kind!r}")
        self._states: list | None = None

    def step(self, q, a):
        return self._step(q, a)

    def allows(self, word) -> bool:
        q = self.start
        for a in word:
            q = self.step(q, int(a))
            if q is DEAD:
                return False
        return True

    @property
    def finite(self) -> bool:
        return self.subset.kind != "language"

    def states(self) -> list:
        """Reachable live states, start first (finite-state languages only)."""
        if self._states is None:
            if not self.finite:
                raise SystemError("predicate languages have no finite state set")
            seen = {self.start: 0}
            order = [self.start]
            i = 0
            while i < len(order):
                q = order[i]
                i += 1
                for a in range(self.alphabet):
                    r = self.step(q, a)
                    if r is not DEAD and r not in seen:
                        seen[r] = len(order)
                        order.append(r)
            self._states = order
        return self._states


def _forbidden_automaton(forbidden):
    w = max(len(f) for f in forbidden)
    bad = set(forbidden)
    keep = w - 1

    def step(q, a):
        word = q + (a,)
        for L in range(1, len(word) + 1):
            if word[-L:] in bad:
                return DEAD
        return word[-keep:] if keep else ()

    return (), step


# ---------------------------------------------------------------------------
# transfer matrices
# ---------------------------------------------------------------------------

def letter_matrices(auto: Automaton, letter_counts: np.ndarray) -> np.ndarray:
    """Per-coordinate transition-count matrices, shape (len, Q, Q)."""
    states = auto.states()
    index = {q: i for i, q in enumerate(states)}
    Q = len(states)
    cache: dict[int, np.ndarray] = {}
    out = np.empty((len(letter_counts), Q, Q))
    for p, b in enumerate(letter_counts):
        b = int(b)
        if b not in cache:
            T = np.zeros((Q, Q))
            for qi, q in enumerate(states):
                for a in range(b):
                    r = auto.step(q, a)
                    if r is not DEAD:
                        T[qi, index[r]] += 1
            cache[b] = T
        out[p] = cache[b]
    return out


def step_log_matrices(sys: NdsSystem, subset: SubsetSpec, n: int, auto: Automaton | None = None) -> np.ndarray:
    """log transition multiplicities for system steps 1..n (block products)."""
    auto = auto or Automaton(subset, sys.phase.alphabet)
    B = sys.block
    letters = sys.letters(n * B)
    mats = letter_matrices(auto, letters)
    if B > 1:
        Q = mats.shape[1]
        grouped = np.empty((n, Q, Q))
        for j in range(n):
            M = mats[j * B]
            for t in range(1, B):
                M = M @ mats[j * B + t]
            grouped[j] = M
        mats = grouped
    with np.errstate(divide="ignore"):
        return np.log(mats)


def _start_vector(Q: int) -> np.ndarray:
    v = np.full(Q, -np.inf)
    v[0] = 0.0
    return v


def log_cylinder_counts(sys: NdsSystem, subset: SubsetSpec, horizons) -> np.ndarray:
    """Exact log of the number of length-n dynamical cylinders meeting K.

    A word counts when it extends by another ``Q`` steps (``Q`` = number of
    automaton states), which is exact for stationary letter sets.
    """
    horizons = np.asarray(horizons, dtype=np.int64)
    if sys.family != "symbolic":
        raise SystemError("cylinder counts need a symbolic system")
    nmax = int(horizons.max())
    if subset.kind == "whole":
        logb = sys.log_branching(nmax)
        cum = np.concatenate([[0.0], np.cumsum(logb)])
        return cum[horizons]
    if subset.kind == "points":
        raise SystemError("point samples are counted by the metric module")
    auto = Automaton(subset, sys.phase.alphabet)
    if not auto.finite:
        return np.array([np.log(max(1, len(allowed_words(sys, subset, int(n) * sys.block)))) for n in horizons])
    Q = len(auto.states())
    look = Q
    logT = step_log_matrices(sys, subset, nmax + look, auto)
    fwd = kernels.log_forward(logT[:nmax], _start_vector(Q))
    out = np.empty(len(horizons))
    for i, n in enumerate(horizons):
        tail = kernels.log_forward(_transpose(logT[n : n + look][::-1]), np.zeros(Q))[-1]
        alive = np.isfinite(tail)
        vals = fwd[n][alive]
        vals = vals[np.isfinite(vals)]
        out[i] = np.logaddexp.reduce(vals) if vals.size else -np.inf
    return out


def _transpose(logT):
    return np.ascontiguousarray(np.transpose(logT, (0, 2, 1)))


# ---------------------------------------------------------------------------
# explicit enumeration (small depths; used by covers and oracles)
# ---------------------------------------------------------------------------

def allowed_words(sys: NdsSystem, subset: SubsetSpec, length: int, extend: int | None = None) -> list[tuple[int, ...]]:
    """All canonical words of ``length`` letters that are prefixes of K.

    Letter restrictions of the system apply; a word must extend by
    ``extend`` more letters (default: number of automaton states).
    """
    auto = Automaton(subset, sys.phase.alphabet)
    if extend is None:
        extend = len(auto.states()) if auto.finite else 0
    letters = sys.letters(length + extend)
    words: list[tuple[int, ...]] = []
    _extendable = _extension_checker(auto, letters, length, extend)

    def rec(prefix, q):
        p = len(prefix)
        if p == length:
            if _extendable(q):
                words.append(prefix)
            return
        for a in range(int(letters[p])):
            r = auto.step(q, a)
            if r is not DEAD:
                rec(prefix + (a,), r)

    rec((), auto.start)
    return words


def _extension_checker(auto, letters, start, extend):
    if extend == 0:
        return lambda q: True

    @lru_cache(maxsize=None)
    def ok(q, depth):
        if depth == extend:
            return True
        for a in range(int(letters[start + depth])):
            r = auto.step(q, a)
            if r is not DEAD and ok(r, depth + 1):
                return True
        return False

    return lambda q: ok(q, 0)


def all_words(alphabet: int, length: int):
    return list(product(range(alphabet), repeat=length))
