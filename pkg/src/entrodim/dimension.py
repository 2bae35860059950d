"""Count series, finite-horizon s-entropies and classical entropy dimensions.

The upper (lower) dimension is the critical s at which the limsup (liminf)
of ``log N(n) / n**s`` drops from infinity to zero.  At finite horizon both
are read off a geometric horizon schedule in two ways: a least-squares slope
of ``ln log N`` against ``ln n``, and a bisection on s driven by whether the
upper or lower envelope of ``log N / n**s`` still grows over the tail.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .metrics import CountRecord, exact_cylinder_count, log_word_counts
from .symbolic import log_cylinder_counts
from .systems import NdsSystem, SubsetSpec

__all__ = [
    "CountSeries",
    "DimensionEstimate",
    "geometric_horizons",
    "cylinder_series",
    "s_entropy",
    "classify_entropy",
    "estimate_dimension",
    "dimension_from_cover",
    "entropy_rate",
    "DEFAULT_THRESHOLDS",
    "S_GRID",
]

DEFAULT_THRESHOLDS = (0.01, 10.0)
S_GRID = tuple(round(0.1 * k, 1) for k in range(1, 21))
SCAN_WIDTH = 0.01
FIT_RESIDUAL_MAX = 0.05
FLAT_TOL = 1e-12


@dataclass(frozen=True)
class CountSeries:
    """log counts at strictly increasing horizons."""

    horizons: np.ndarray
    log_values: np.ndarray
    source: str = "cylinder"
    exact: bool = True

    def __post_init__(self):
        h = np.asarray(self.horizons, dtype=np.int64)
        v = np.asarray(self.log_values, dtype=float)
        if h.ndim != 1 or h.shape != v.shape:
            raise ValueError("horizons and values must be matching 1-d arrays")
        if len(h) == 0:
            raise ValueError("empty series")
        if np.any(np.diff(h) <= 0):
            raise ValueError("horizons must strictly increase")
        if not np.all(np.isfinite(v)) or np.any(v < -1e-12):
            raise ValueError("log counts must be finite and nonnegative")
        object.__setattr__(self, "horizons", h)
        object.__setattr__(self, "log_values", np.maximum(v, 0.0))

    def __len__(self) -> int:
        return len(self.horizons)

    @property
    def exactness(self) -> str:
        return "all-exact" if self.exact else "bounds"

    @classmethod
    def from_records(cls, records: Sequence[CountRecord]) -> "CountSeries":
        if not records:
            raise ValueError("empty series")
        kinds = {r.count_type for r in records}
        if len(kinds) != 1:
            raise ValueError("mixed count types in one series")
        return cls(np.array([r.n for r in records]), np.array([r.log_value for r in records]),
                   kinds.pop(), all(r.kind == "exact" for r in records))


@dataclass(frozen=True)
class DimensionEstimate:
    upper: float
    lower: float
    method: str
    fit_window: tuple[int, int]
    residual: float
    classification: dict = field(default_factory=dict)
    zero_growth: bool = False
    htop: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.lower > self.upper + 1e-12:
            raise ValueError(f"lower {self.lower} exceeds upper {self.upper}")

    @property
    def value(self) -> float:
        return self.upper


def geometric_horizons(n_min: int, n_max: int, ratio: float = 2.0) -> np.ndarray:
    """n_min, n_min*ratio, ... up to and including n_max (integers, deduplicated)."""
    if n_min < 1 or n_max < n_min or ratio <= 1:
        raise ValueError("need 1 <= n_min <= n_max and ratio > 1")
    out = []
    x = float(n_min)
    while x <= n_max * (1 + 1e-12):
        out.append(int(round(x)))
        x *= ratio
    if out[-1] != n_max:
        out.append(int(n_max))
    return np.unique(np.array(out, dtype=np.int64))


def cylinder_series(sys: NdsSystem, K: SubsetSpec | None, horizons: Iterable[int]) -> CountSeries:
    """Exact 1-cylinder counts of a symbolic system at the given horizons."""
    h = np.asarray(list(horizons), dtype=np.int64)
    return CountSeries(h, log_cylinder_counts(sys, K or SubsetSpec.whole(), h), "cylinder", True)


# ---------------------------------------------------------------------------
# s-entropy and classification
# ---------------------------------------------------------------------------

def _normalized(series: CountSeries, s: float) -> np.ndarray:
    return series.log_values / series.horizons.astype(float) ** s


def s_entropy(series: CountSeries, s: float, tail: int | None = None) -> tuple[float, float]:
    """(max, min) of log N(n) / n**s over the last ``tail`` horizons."""
    if len(series) == 0:
        raise ValueError("empty series")
    tail = tail or max(1, len(series) // 2)
    if tail > len(series):
        raise ValueError("tail longer than the series")
    v = _normalized(series, s)[-tail:]
    return float(v.max()), float(v.min())


def _trend(series: CountSeries, s: float, tail: int) -> float:
    """Least-squares slope of ln(log N / n**s) against ln n over the tail."""
    v = _normalized(series, s)[-tail:]
    n = series.horizons[-tail:].astype(float)
    if np.any(v <= 0):
        return -np.inf if np.all(v <= 0) else 0.0
    return float(np.polyfit(np.log(n), np.log(v), 1)[0])


def _flat(series: CountSeries) -> bool:
    half = series.log_values[len(series) // 2:]
    return bool(half.max() - half.min() <= FLAT_TOL * max(1.0, half.max()))


def classify_entropy(series: CountSeries, s: float, thresholds=DEFAULT_THRESHOLDS, tail: int | None = None) -> str:
    """``zero``, ``finite`` or ``infinite`` for the finite-horizon s-entropy."""
    low, high = thresholds
    if not 0 < low < high:
        raise ValueError("thresholds must satisfy 0 < low < high")
    if _flat(series) and s > 0:
        return "zero"
    tail = tail or max(2, len(series) // 2)
    upper, lower = s_entropy(series, s, tail)
    slope = _trend(series, s, tail)
    if slope > 0 and upper > high:
        return "infinite"
    if slope < 0 and upper < low:
        return "zero"
    return "finite"


def entropy_rate(series: CountSeries) -> float:
    """Increment rate of log N over the tail, a finite-horizon h_top estimate."""
    if len(series) < 2:
        return float(series.log_values[-1] / series.horizons[-1])
    tail = max(2, len(series) // 2)
    h = series.horizons[-tail:].astype(float)
    v = series.log_values[-tail:]
    return float(max(0.0, (v[-1] - v[0]) / (h[-1] - h[0])))


# ---------------------------------------------------------------------------
# dimension estimators
# ---------------------------------------------------------------------------

def _loglog_fit(series: CountSeries) -> tuple[float, float, tuple[int, int]]:
    k = max(2, len(series) // 2)
    n = series.horizons[-k:].astype(float)
    v = series.log_values[-k:]
    keep = v > 0
    if keep.sum() < 2:
        return 0.0, 0.0, (int(n[0]), int(n[-1]))
    x, y = np.log(n[keep]), np.log(v[keep])
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    return float(coef[0]), float(np.sqrt(np.mean(resid ** 2))), (int(n[0]), int(n[-1]))


def _grows(series: CountSeries, s: float, tail: int, envelope: str) -> bool:
    """Whether the upper/lower envelope of log N / n**s increases over the tail."""
    v = _normalized(series, s)[-tail:]
    half = len(v) // 2
    first, second = v[: len(v) - half], v[len(v) - half:]
    if envelope == "upper":
        return bool(second.max() > first.max())
    return bool(second.min() > first.min())


def _scan(series: CountSeries, envelope: str, tail: int, lo: float = 0.0, hi: float = 2.0,
          width: float = SCAN_WIDTH) -> float:
    if _grows(series, hi, tail, envelope):
        return hi
    if not _grows(series, max(lo, 1e-9), tail, envelope):
        return lo
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if _grows(series, mid, tail, envelope):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def estimate_dimension(series: CountSeries, method: str = "auto", thresholds=DEFAULT_THRESHOLDS,
                       s_grid: Sequence[float] = S_GRID) -> DimensionEstimate:
    """Upper/lower classical entropy dimension of a count series.

    ``method`` is ``loglog-fit``, ``s-scan`` or ``auto`` (fit when the series
    is exact and the fit residual is small, else the scan).  Series whose
    counts stop growing short-circuit to 0 with ``zero_growth`` set.
    """
    if method not in ("auto", "loglog-fit", "s-scan"):
        raise ValueError(f"unknown method {method!r}")
    window = (int(series.horizons[len(series) // 2]), int(series.horizons[-1]))
    classes = {float(s): classify_entropy(series, s, thresholds) for s in s_grid}
    if np.all(series.log_values == 0) or _flat(series) or len(series) < 2:
        return DimensionEstimate(0.0, 0.0, "zero-growth" if method == "auto" else method, window, 0.0,
                                 classes, zero_growth=True, htop=entropy_rate(series),
                                 diagnostics={"reason": "counts stop growing"})
    slope, residual, fit_window = _loglog_fit(series)
    tail = max(4, len(series) // 2)
    tail = min(tail, len(series))
    up = _scan(series, "upper", tail)
    lo = min(_scan(series, "lower", tail), up)
    diag = {"loglog_slope": slope, "scan_upper": up, "scan_lower": lo,
            "disagreement": abs(slope - 0.5 * (up + lo)), "series_exact": series.exact,
            "n_horizons": len(series)}
    if len(series) < 6:
        diag["warning"] = "fewer than 6 horizons"
    use_fit = method == "loglog-fit" or (method == "auto" and series.exact and residual < FIT_RESIDUAL_MAX)
    if use_fit:
        value = max(0.0, slope)
        return DimensionEstimate(value, value, "loglog-fit", fit_window, residual, classes,
                                 htop=entropy_rate(series), diagnostics=diag)
    return DimensionEstimate(up, lo, "s-scan", window, residual, classes, htop=entropy_rate(series),
                             diagnostics=diag)


def dimension_from_cover(sys: NdsSystem, U, K: SubsetSpec | None, horizons: Iterable[int],
                         method: str = "auto") -> DimensionEstimate:
    """Dimension of the single-cover series N(U_1^n |_K).

    Symbolic cylinder partitions of letter depth j are counted exactly as
    words of ``(n-1)*block + j`` letters; other covers go through explicit
    dynamical joins (small horizons only).
    """
    from .covers import cylinder_depth, dynamical_join, min_subcover_count

    K = K or SubsetSpec.whole()
    h = np.asarray(list(horizons), dtype=np.int64)
    depth = cylinder_depth(U)
    if depth is not None and sys.family == "symbolic":
        logs = log_word_counts(sys, K, (h - 1) * sys.block + depth) if depth > 0 else np.zeros(len(h))
        series = CountSeries(h, logs, "cover", True)
    else:
        vals, exact = [], True
        for n in h:
            c = min_subcover_count(dynamical_join(sys, U, int(n)), K, sys)
            vals.append(np.log(c.value))
            exact = exact and c.exact
        series = CountSeries(h, np.array(vals), "cover", exact)
    est = estimate_dimension(series, method)
    est.diagnostics["cover_size"] = len(U)
    return est
