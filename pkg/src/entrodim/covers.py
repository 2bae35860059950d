"""Finite open covers: joins, pullbacks, dynamical joins, minimal subcovers.

Three element representations share one :class:`OpenCoverRep` wrapper:

* circle  -- :class:`ArcSet`, a finite union of open arcs with exact
  rational endpoints (pullbacks under x -> a x + t stay exact);
* finite  -- frozensets of point indices;
* symbolic -- :class:`WordSet`, a set of canonical words of one depth, i.e. a
  finite union of cylinders.  Covers remember the system whose coordinate
  letters they live on (``space``) so empty intersections can be dropped.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Any, Iterable

import numpy as np

from . import kernels
from .symbolic import Automaton, allowed_words
from .systems import NdsSystem, SubsetSpec, shift_system

__all__ = [
    "ArcSet",
    "WordSet",
    "OpenCoverRep",
    "CoverError",
    "arc",
    "whole_circle",
    "circle_cover",
    "finite_cover",
    "cylinder_cover",
    "whole_cover",
    "symbolic_cover",
    "intersection_pairs",
    "cylinder_depth",
    "join",
    "pullback",
    "dynamical_join",
    "min_subcover_count",
    "SubcoverCount",
    "refines",
    "lebesgue_number",
    "set_cover",
]

EXACT_INCIDENCE_CAP = 2 ** 20


class CoverError(ValueError):
    """Cover operation outside its supported domain."""


# ---------------------------------------------------------------------------
# circle elements
# ---------------------------------------------------------------------------

@dataclass(frozen=True, order=True)
class ArcSet:
    """Open subset of the unit circle.

    ``intervals`` are disjoint open intervals of (0, 1) in increasing order;
    ``zero`` records whether the point 0 belongs (then the set contains
    intervals touching both 0 and 1).
    """

    intervals: tuple[tuple[Fraction, Fraction], ...]
    zero: bool = False

    def __post_init__(self):
        if self.zero and not (self.intervals and self.intervals[0][0] == 0 and self.intervals[-1][1] == 1):
            raise CoverError("an open arc set containing 0 must contain a neighbourhood of 0")

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    def contains(self, x) -> bool:
        x = Fraction(x) % 1
        if x == 0:
            return self.zero
        return any(a < x < b for a, b in self.intervals)

    def intersect(self, other: "ArcSet") -> "ArcSet":
        out = []
        for a, b in self.intervals:
            for c, d in other.intervals:
                lo, hi = max(a, c), min(b, d)
                if lo < hi:
                    out.append((lo, hi))
        return ArcSet(tuple(sorted(out)), self.zero and other.zero)

    def subset_of(self, other: "ArcSet") -> bool:
        if self.zero and not other.zero:
            return False
        return all(any(c <= a and b <= d for c, d in other.intervals) for a, b in self.intervals)

    def preimage(self, a: int, t: Fraction) -> "ArcSet":
        """Preimage under x -> a x + t (mod 1), a >= 1 integer."""
        t = Fraction(t) % 1
        pieces = []
        for lo, hi in self.intervals:
            for j in range(-1, a + 2):
                p, q = (lo - t + j) / a, (hi - t + j) / a
                p, q = max(p, Fraction(0)), min(q, Fraction(1))
                if p < q:
                    pieces.append((p, q))
        return ArcSet(_merge(sorted(set(pieces)), lambda p: self.contains(a * p + t)), self.contains(t))

    def arcs(self) -> list[tuple[Fraction, Fraction]]:
        """Connected components as (start, end) with end possibly past 1."""
        iv = list(self.intervals)
        if self.zero:
            if len(iv) == 1:
                return [(Fraction(0), Fraction(2))]
            first, last = iv[0], iv[-1]
            iv = iv[1:-1] + [(last[0], 1 + first[1])]
        return iv

    def breakpoints(self) -> set[Fraction]:
        pts = set()
        for a, b in self.intervals:
            pts.add(a % 1)
            pts.add(b % 1)
        return pts


def _merge(pieces, keep_point) -> tuple:
    """Fuse open intervals sharing an endpoint that belongs to the set."""
    out: list[tuple[Fraction, Fraction]] = []
    for lo, hi in pieces:
        if out and out[-1][1] == lo and keep_point(lo):
            out[-1] = (out[-1][0], hi)
        else:
            out.append((lo, hi))
    return tuple(out)


def arc(a, b) -> ArcSet:
    """Open arc from ``a`` counterclockwise to ``b`` (``b`` may exceed 1)."""
    a, b = Fraction(a), Fraction(b)
    if b <= a:
        raise CoverError("arc end must exceed its start")
    shift = a // 1
    a, b = a - shift, b - shift
    if b - a >= 1:
        if b - a > 1:
            return whole_circle()
        if a == 0:
            return ArcSet(((Fraction(0), Fraction(1)),), False)
        return ArcSet(((Fraction(0), a), (a, Fraction(1))), True)
    if b <= 1:
        return ArcSet(((a, b),), False)
    return ArcSet(((Fraction(0), b - 1), (a, Fraction(1))), True)


def whole_circle() -> ArcSet:
    return ArcSet(((Fraction(0), Fraction(1)),), True)


# ---------------------------------------------------------------------------
# symbolic elements
# ---------------------------------------------------------------------------

@dataclass(frozen=True, order=True)
class WordSet:
    """Union of depth-``depth`` cylinders given by canonical words."""

    depth: int
    words: frozenset = field(default_factory=frozenset)

    @property
    def is_empty(self) -> bool:
        return not self.words

    def sort_key(self):
        return (self.depth, tuple(sorted(self.words)))


def _letters(space: NdsSystem | None, alphabet: int, count: int) -> np.ndarray:
    if space is None:
        return np.full(count, alphabet, dtype=np.int64)
    return space.letters(count)


def _lift_filter(deep: WordSet, shallow: WordSet) -> WordSet:
    L = shallow.depth
    return WordSet(deep.depth, frozenset(w for w in deep.words if w[:L] in shallow.words))


def _restrict(ws: WordSet, letters: np.ndarray) -> WordSet:
    return WordSet(ws.depth, frozenset(w for w in ws.words if all(a < letters[i] for i, a in enumerate(w))))


# ---------------------------------------------------------------------------
# the cover
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OpenCoverRep:
    """Finite open cover; elements are kept in canonical sorted order."""

    phase_kind: str
    elements: tuple
    alphabet: int = 0
    size: int = 0
    space: Any = None

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def same_sets(self, other: "OpenCoverRep") -> bool:
        return set(self.elements) == set(other.elements)


def _canonical(kind, elements: Iterable, **kw) -> OpenCoverRep:
    elems = [e for e in elements if not _empty(kind, e)]
    uniq = list(dict.fromkeys(elems))
    if kind == "symbolic":
        uniq.sort(key=WordSet.sort_key)
    elif kind == "finite":
        uniq.sort(key=lambda e: tuple(sorted(e)))
    else:
        uniq.sort()
    if not uniq:
        raise CoverError("cover has no nonempty element")
    return OpenCoverRep(kind, tuple(uniq), **kw)


def _empty(kind, e) -> bool:
    if kind == "finite":
        return len(e) == 0
    return e.is_empty


def circle_cover(sets: Iterable[ArcSet]) -> OpenCoverRep:
    cover = _canonical("circle", sets)
    _check_circle_covering(cover)
    return cover


def finite_cover(sets: Iterable[Iterable[int]], size: int) -> OpenCoverRep:
    cover = _canonical("finite", (frozenset(int(x) for x in s) for s in sets), size=size)
    union = set().union(*cover.elements)
    if union != set(range(size)):
        raise CoverError("sets do not cover the finite space")
    return cover


def cylinder_cover(sys: NdsSystem | None, depth: int = 1, alphabet: int | None = None) -> OpenCoverRep:
    """All nonempty depth-``depth`` cylinders of the system's time-1 space."""
    m = alphabet if sys is None else sys.phase.alphabet
    letters = _letters(sys, m, depth)
    words = [()]
    for p in range(depth):
        words = [w + (a,) for w in words for a in range(int(letters[p]))]
    return _canonical("symbolic", (WordSet(depth, frozenset([w])) for w in words), alphabet=m, space=sys)


def cylinder_depth(U: OpenCoverRep) -> int | None:
    """Letter depth j when U is the full depth-j cylinder partition, else None."""
    if U.phase_kind != "symbolic":
        return None
    depths = {e.depth for e in U.elements}
    if len(depths) != 1 or any(len(e.words) != 1 for e in U.elements):
        if depths == {0}:
            return 0
        return None
    j = depths.pop()
    letters = _letters(U.space, U.alphabet, j)
    return j if len(U.elements) == int(np.prod(letters.astype(object))) else None


def whole_cover(kind: str, sys: NdsSystem | None = None, alphabet: int = 2, size: int = 0) -> OpenCoverRep:
    if kind == "circle":
        return circle_cover([whole_circle()])
    if kind == "finite":
        return finite_cover([range(size)], size)
    return _canonical("symbolic", [WordSet(0, frozenset([()]))], alphabet=sys.phase.alphabet if sys else alphabet, space=sys)


def symbolic_cover(sets: Iterable[WordSet], sys: NdsSystem | None = None, alphabet: int = 2) -> OpenCoverRep:
    m = sys.phase.alphabet if sys is not None else alphabet
    return _canonical("symbolic", sets, alphabet=m, space=sys)


def _check_circle_covering(cover: OpenCoverRep) -> None:
    for x in _circle_atoms(cover.elements):
        if not any(e.contains(x) for e in cover.elements):
            raise CoverError(f"circle cover misses the point {x}")


def _circle_atoms(elements) -> list[Fraction]:
    """One representative per cell of the endpoint arrangement (points and gaps)."""
    pts = {Fraction(0)}
    for e in elements:
        pts |= e.breakpoints()
    pts = sorted(pts)
    atoms = list(pts)
    ring = pts + [pts[0] + 1]
    atoms += [(ring[i] + ring[i + 1]) / 2 for i in range(len(pts))]
    return [a % 1 for a in atoms]


# ---------------------------------------------------------------------------
# join, pullback, refinement
# ---------------------------------------------------------------------------

def _check_same(U: OpenCoverRep, V: OpenCoverRep) -> None:
    if U.phase_kind != V.phase_kind:
        raise CoverError(f"mixed phase kinds {U.phase_kind!r} and {V.phase_kind!r}")


def _intersect(kind, a, b, space=None):
    if kind == "circle":
        return a.intersect(b)
    if kind == "finite":
        return a & b
    if a.depth >= b.depth:
        return _lift_filter(a, b)
    return _lift_filter(b, a)


def intersection_pairs(U: OpenCoverRep, V: OpenCoverRep) -> list[tuple[int, int, Any]]:
    """Every nonempty U_i & V_j as (i, j, set), before duplicates are merged."""
    _check_same(U, V)
    out = []
    for i, a in enumerate(U.elements):
        for j, b in enumerate(V.elements):
            c = _intersect(U.phase_kind, a, b)
            if U.phase_kind == "symbolic" and (U.space or V.space) is not None:
                c = _restrict(c, (U.space or V.space).letters(c.depth))
            if not _empty(U.phase_kind, c):
                out.append((i, j, c))
    return out


def join(U: OpenCoverRep, V: OpenCoverRep) -> OpenCoverRep:
    """U v V: all nonempty pairwise intersections."""
    _check_same(U, V)
    kind = U.phase_kind
    space = U.space if U.space is not None else V.space
    pieces = []
    if kind == "symbolic":
        # lift shallow elements lazily: group deep words by their shallow prefix
        for a in U.elements:
            for b in V.elements:
                pieces.append(_intersect(kind, a, b))
        if space is not None:
            depth = max((p.depth for p in pieces), default=0)
            letters = space.letters(depth)
            pieces = [_restrict(p, letters) for p in pieces]
        return _canonical(kind, pieces, alphabet=U.alphabet, space=space)
    for a in U.elements:
        for b in V.elements:
            pieces.append(_intersect(kind, a, b))
    return _canonical(kind, pieces, alphabet=U.alphabet, size=U.size)


def _compose_affine(sys: NdsSystem, i: int, j: int) -> tuple[int, Fraction]:
    A, T = 1, Fraction(0)
    for k in range(i, i + j):
        a, t = sys.affine(k)
        A, T = a * A, (a * T + t) % 1
    return A, T


def pullback(sys: NdsSystem, i: int, j: int, U: OpenCoverRep) -> OpenCoverRep:
    """f_i^{-j}(U): exact preimages of every element under f_i^j."""
    if j < 0 or i < 1:
        raise CoverError("need i >= 1 and j >= 0")
    kind = U.phase_kind
    if j == 0:
        if kind == "symbolic" and sys.family == "symbolic":
            return _canonical(kind, U.elements, alphabet=U.alphabet, space=shift_system(sys, i))
        return U
    if kind == "circle":
        if sys.family != "circle":
            raise CoverError(f"no closed-form preimages for family {sys.family!r} on the circle")
        A, T = _compose_affine(sys, i, j)
        return _canonical(kind, (e.preimage(A, T) for e in U.elements))
    if kind == "finite":
        if sys.family != "finite":
            raise CoverError("finite covers need a finite system")
        idx = np.arange(sys.phase.size)
        for k in range(i, i + j):
            idx = sys.table(k)[idx]
        return _canonical(kind, (frozenset(int(x) for x in np.flatnonzero(np.isin(idx, list(e)))) for e in U.elements),
                          size=U.size)
    if sys.family != "symbolic":
        raise CoverError("symbolic covers need a symbolic system")
    here = shift_system(sys, i)
    shift = j * sys.block
    letters = here.letters(shift + max(e.depth for e in U.elements))
    prefixes = [()]
    for p in range(shift):
        prefixes = [w + (a,) for w in prefixes for a in range(int(letters[p]))]
    out = []
    for e in U.elements:
        tail_ok = [w for w in e.words if all(a < letters[shift + q] for q, a in enumerate(w))]
        out.append(WordSet(shift + e.depth, frozenset(u + w for u in prefixes for w in tail_ok)))
    return _canonical(kind, out, alphabet=U.alphabet, space=here)


def dynamical_join(sys: NdsSystem, U: OpenCoverRep, n: int) -> OpenCoverRep:
    """U_1^n = U v f_1^{-1} U v ... v f_1^{-(n-1)} U."""
    if n < 1:
        raise CoverError("horizon must be >= 1")
    acc = pullback(sys, 1, 0, U)
    for j in range(1, n):
        acc = join(acc, pullback(sys, 1, j, U))
    return acc


def _contained(kind, a, b, space, alphabet) -> bool:
    if kind == "circle":
        return a.subset_of(b)
    if kind == "finite":
        return a <= b
    if a.depth >= b.depth:
        return all(w[: b.depth] in b.words for w in a.words)
    letters = _letters(space, alphabet, b.depth)
    ext = int(np.prod(letters[a.depth : b.depth].astype(object)))
    inside = sum(1 for w in b.words if w[: a.depth] in a.words)
    return inside == len(a.words) * ext


def refines(U: OpenCoverRep, V: OpenCoverRep) -> bool:
    """True iff V refines U (every element of V lies inside some element of U)."""
    _check_same(U, V)
    space = V.space if V.space is not None else U.space
    return all(any(_contained(U.phase_kind, v, u, space, U.alphabet) for u in U.elements) for v in V.elements)


# ---------------------------------------------------------------------------
# minimal subcovers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SubcoverCount:
    value: int
    exact: bool

    def __int__(self) -> int:
        return self.value


MEMO_CAP = 2 ** 20


def set_cover(masks: list[int], universe: int, exact_cap: int = EXACT_INCIDENCE_CAP) -> tuple[int, bool]:
    """Minimum number of masks whose union is ``universe`` (bitsets as ints).

    Branch and bound when the incidence count is below ``exact_cap``,
    greedy upper bound otherwise.
    """
    masks = [m & universe for m in masks]
    masks = [m for m in dict.fromkeys(masks) if m]
    if universe == 0:
        return 0, True
    covered = 0
    for m in masks:
        covered |= m
    if covered != universe:
        raise CoverError("sets do not cover the target")
    masks = [m for m in masks if not any(o != m and (m | o) == o for o in masks)]
    masks.sort(key=lambda m: -bin(m).count("1"))
    greedy = _greedy_cover(masks, universe)
    incidences = sum(bin(m).count("1") for m in masks)
    if incidences > exact_cap:
        return greedy, False
    if all((a & b) == 0 for a, b in combinations(masks, 2)):
        return len(masks), True
    bits = [1 << b for b in range(universe.bit_length()) if universe >> b & 1]
    if len(bits) <= 64 and kernels.BACKEND == "numba":
        packed = np.array([sum(1 << k for k, b in enumerate(bits) if m & b) for m in masks], dtype=np.uint64)
        return int(kernels.set_cover_loop(packed, len(bits), greedy)), True
    best = [greedy]
    holders = {b: [m for m in masks if m & b] for b in bits}
    seen: dict[int, int] = {}
    shared = {b: 0 for b in bits}
    for b in bits:
        for m in holders[b]:
            shared[b] |= m
    by_rarity = sorted(bits, key=lambda b: len(holders[b]))

    def lower_bound(uncovered: int) -> int:
        # elements pairwise without a common holder each need their own set
        blocked, packing = 0, 0
        for b in by_rarity:
            if uncovered & b and not blocked & b:
                packing += 1
                blocked |= shared[b]
        return packing

    def bnb(uncovered: int, used: int):
        if uncovered == 0:
            best[0] = min(best[0], used)
            return
        if seen.get(uncovered, best[0] + 1) <= used:
            return
        if len(seen) < MEMO_CAP:
            seen[uncovered] = used
        if used + lower_bound(uncovered) >= best[0]:
            return
        # branch on the uncovered element with the fewest holders
        pivot = min((b for b in bits if uncovered & b), key=lambda b: len(holders[b]))
        for m in sorted(holders[pivot], key=lambda m: -bin(m & uncovered).count("1")):
            bnb(uncovered & ~m, used + 1)

    bnb(universe, 0)
    return best[0], True


def _greedy_cover(masks, universe) -> int:
    uncovered = universe
    count = 0
    while uncovered:
        best = max(masks, key=lambda m: bin(m & uncovered).count("1"))
        uncovered &= ~best
        count += 1
    return count


def min_subcover_count(U: OpenCoverRep, K: SubsetSpec | None = None, sys: NdsSystem | None = None) -> SubcoverCount:
    """N(U|_K): minimal number of elements of U covering K."""
    K = K or SubsetSpec.whole()
    kind = U.phase_kind
    if kind == "finite":
        atoms = list(range(U.size)) if K.kind == "whole" else sorted(set(int(x) for x in np.ravel(K.points)))
        masks = [sum(1 << i for i, x in enumerate(atoms) if x in e) for e in U.elements]
    elif kind == "circle":
        if K.kind == "points":
            atoms = [Fraction(float(x)) for x in np.ravel(K.points)]
        elif K.kind == "whole":
            atoms = _circle_atoms(U.elements)
        else:
            raise CoverError("circle covers take whole-space or point-sample subsets")
        masks = [sum(1 << i for i, x in enumerate(atoms) if e.contains(x)) for e in U.elements]
    else:
        space = sys if sys is not None else U.space
        depth = max(e.depth for e in U.elements)
        if space is None:
            from .systems import build_system

            space = build_system({"family": "full_shift", "alphabet": U.alphabet})
        atoms = allowed_words(space, K, depth)
        masks = [sum(1 << i for i, w in enumerate(atoms) if w[: e.depth] in e.words) for e in U.elements]
    universe = (1 << len(atoms)) - 1
    value, exact = set_cover(masks, universe)
    return SubcoverCount(value, exact)


# ---------------------------------------------------------------------------
# Lebesgue numbers
# ---------------------------------------------------------------------------

def lebesgue_number(U: OpenCoverRep, resolution: int = 2 ** 16, dist=None) -> float:
    """A valid (not necessarily maximal) Lebesgue number of U.

    Circle: min over grid centres of the largest radius fitting in one
    element, less the grid spacing.  Finite: smallest diameter of a subset
    not contained in any element (``dist`` is the distance table).
    """
    if U.phase_kind == "circle":
        _check_circle_covering(U)
        if any(e == whole_circle() for e in U.elements):
            return 0.5
        h = 1.0 / resolution
        c = np.arange(resolution) * h
        best = np.zeros(resolution)
        for e in U.elements:
            reach = np.zeros(resolution)
            for start, end in e.arcs():
                s, L = float(start), float(end - start)
                pos = np.mod(c - s, 1.0)
                inside = (pos > 0) & (pos < L)
                reach = np.maximum(reach, np.where(inside, np.minimum(pos, L - pos), 0.0))
            best = np.maximum(best, reach)
        delta = float(best.min()) - h
        if delta <= 0:
            raise CoverError("grid too coarse for this cover")
        return delta
    if U.phase_kind == "finite":
        if dist is None:
            raise CoverError("finite Lebesgue numbers need the distance table")
        D = np.asarray(dist, dtype=float)
        n = D.shape[0]
        if n > 16:
            raise CoverError("finite Lebesgue number enumerates subsets; space too large")
        if any(len(e) == n for e in U.elements):
            return float(D.max())
        best = np.inf
        for mask in range(1, 1 << n):
            pts = [i for i in range(n) if mask >> i & 1]
            if any(set(pts) <= e for e in U.elements):
                continue
            diam = max(D[a, b] for a in pts for b in pts)
            best = min(best, diam)
        return float(best)
    raise CoverError("Lebesgue numbers are defined here for circle and finite covers")
