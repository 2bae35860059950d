"""Experiment configs, output files, the randomized property suite and the example table.

Config files are JSON objects with exactly these keys (unknown keys are
rejected)::

    system     system descriptor passed to build_system (required)
    subset     {"kind": "whole"} | {"kind": "subshift", "forbidden": [...]}
               | {"kind": "union", "parts": [[...], [...]]}
               | {"kind": "grid", "resolution": R} | {"kind": "points", "points": [...]}
    method     classical-cylinder | classical-separated | classical-spanning | pesin
    horizons   {"n_min": a, "n_max": b, "ratio": r} or an increasing list
    epsilons   radii for separated/spanning counts
    depths     cylinder depths j (epsilon = 2**-j) for symbolic separated/spanning counts
    s_grid     exponents for the entropy table
    bisection  {"s_lo", "s_hi", "width", "scales", "N_schedule", "Dmax"} for pesin
    output     file name prefix
    seed       integer
    threads    worker count
"""
from __future__ import annotations

import csv
import io
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from . import __version__
from .covers import (
    CoverError,
    WordSet,
    cylinder_cover,
    dynamical_join,
    join,
    min_subcover_count,
    pullback,
    refines,
    symbolic_cover,
)
from .dimension import (
    S_GRID,
    CountSeries,
    DimensionEstimate,
    classify_entropy,
    cylinder_series,
    entropy_rate,
    estimate_dimension,
    geometric_horizons,
    s_entropy,
)
from .metrics import (
    CountRecord,
    circle_grid,
    exact_cylinder_count,
    exhaustive_separated_count,
    exhaustive_spanning_count,
    interval_grid,
    is_spanning,
    max_separated_count,
    min_spanning_count,
    word_sample,
)
from .pesin import critical_alpha, pesin_dimension
from .symbolic import allowed_words
from .systems import (
    NdsSystem,
    SubsetSpec,
    SymbolPermutations,
    build_system,
    conjugate_system,
    power_system,
    shift_system,
    symbolic_model,
)

__all__ = [
    "ConfigError",
    "NumericError",
    "ExperimentConfig",
    "Verdict",
    "Report",
    "load_config",
    "run_experiment",
    "property_suite",
    "reproduce_section4",
    "corrupted_join",
    "resolve_threads",
    "format_number",
]

CONFIG_KEYS = {"system", "subset", "method", "horizons", "epsilons", "depths", "s_grid", "bisection",
               "output", "seed", "threads"}
METHODS = ("classical-cylinder", "classical-separated", "classical-spanning", "pesin")
BISECTION_KEYS = {"s_lo", "s_hi", "width", "scales", "N_schedule", "Dmax"}
CLASSICAL_TOL = 0.05
PESIN_TOL = 0.03


class ConfigError(ValueError):
    """Config schema violation (CLI exit code 2)."""


class NumericError(RuntimeError):
    """Inconclusive numeric classification (CLI exit code 3)."""


# ---------------------------------------------------------------------------
# config
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    system: dict
    subset: dict = field(default_factory=lambda: {"kind": "whole"})
    method: str = "classical-cylinder"
    horizons: Any = field(default_factory=lambda: {"n_min": 1, "n_max": 1024, "ratio": 2})
    epsilons: tuple = (2.0 ** -4, 2.0 ** -5, 2.0 ** -6, 2.0 ** -7)
    depths: tuple = (1, 2, 3)
    s_grid: tuple = S_GRID
    bisection: dict = field(default_factory=dict)
    output: str = ""
    seed: int = 0
    threads: int | None = None

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be an object")
        unknown = set(raw) - CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "system" not in raw:
            raise ConfigError("config needs a 'system' entry")
        cfg = cls(**{k: (tuple(v) if isinstance(v, list) and k in ("epsilons", "depths", "s_grid") else v)
                     for k, v in raw.items()})
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}")
        if not isinstance(self.system, dict):
            raise ConfigError("system must be an object")
        if not isinstance(self.subset, dict) or "kind" not in self.subset:
            raise ConfigError("subset must be an object with a 'kind'")
        unknown = set(self.bisection) - BISECTION_KEYS
        if unknown:
            raise ConfigError(f"unknown bisection keys: {sorted(unknown)}")
        h = self.horizon_list()
        if h[0] < 1 or np.any(np.diff(h) <= 0):
            raise ConfigError("horizons must be >= 1 and strictly increasing")
        if any(e <= 0 for e in self.epsilons) or any(int(d) < 1 for d in self.depths):
            raise ConfigError("epsilons must be positive and depths >= 1")
        if any(s <= 0 for s in self.s_grid):
            raise ConfigError("s values must be positive")
        if self.threads is not None and int(self.threads) < 1:
            raise ConfigError("threads must be >= 1")

    def horizon_list(self) -> np.ndarray:
        h = self.horizons
        if isinstance(h, dict):
            unknown = set(h) - {"n_min", "n_max", "ratio"}
            if unknown:
                raise ConfigError(f"unknown horizon keys: {sorted(unknown)}")
            ratio = float(h.get("ratio", 2))
            if ratio < 2:
                raise ConfigError("horizon ratio must be >= 2")
            try:
                return geometric_horizons(int(h.get("n_min", 1)), int(h["n_max"]), ratio)
            except (KeyError, ValueError) as exc:
                raise ConfigError(f"bad horizon schedule: {exc}") from exc
        if isinstance(h, (list, tuple)) and h:
            return np.asarray([int(v) for v in h], dtype=np.int64)
        raise ConfigError("horizons must be a schedule object or a nonempty list")


def load_config(path: str | os.PathLike) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return ExperimentConfig.from_dict(raw)


def _subset(desc: dict, sys: NdsSystem) -> SubsetSpec:
    kind = desc.get("kind")
    extra = set(desc) - {"kind", "forbidden", "parts", "resolution", "points", "invariant"}
    if extra:
        raise ConfigError(f"unknown subset keys: {sorted(extra)}")
    if kind == "whole":
        return SubsetSpec.whole()
    if kind == "subshift":
        return SubsetSpec.subshift(desc["forbidden"])
    if kind == "union":
        return SubsetSpec.union(*(SubsetSpec.subshift(p) for p in desc["parts"]))
    if kind == "grid":
        res = int(desc.get("resolution", 4096))
        return interval_grid(res) if sys.family == "interval" else circle_grid(res)
    if kind == "points":
        return SubsetSpec.sample(desc["points"], bool(desc.get("invariant", False)))
    raise ConfigError(f"unsupported subset kind {kind!r}")


def resolve_threads(threads: int | None) -> int:
    if threads is None:
        env = os.environ.get("ENTRODIM_THREADS", "").strip()
        threads = int(env) if env else 1
    if threads < 1:
        raise ConfigError("threads must be >= 1")
    return int(threads)


def _pmap(fn: Callable, items: Sequence, threads: int) -> list:
    """Ordered parallel map; results come back in input order."""
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# reports and files
# ---------------------------------------------------------------------------

@dataclass
class Verdict:
    name: str
    seed: int
    passed: bool
    witness: dict = field(default_factory=dict)


@dataclass
class Report:
    counts: list = field(default_factory=list)
    entropy: list = field(default_factory=list)
    estimates: dict = field(default_factory=dict)
    verdicts: list = field(default_factory=list)
    table: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    version: str = __version__

    @property
    def failures(self) -> list[Verdict]:
        return [v for v in self.verdicts if not v.passed]

    def to_dict(self) -> dict:
        return _jsonable({"version": self.version, "config": self.config, "estimates": self.estimates,
                          "verdicts": [asdict(v) for v in self.verdicts], "table": self.table,
                          "n_counts": len(self.counts), "n_failures": len(self.failures)})


def format_number(x) -> str:
    """17 significant digits; integers verbatim; infinities as inf/-inf."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if np.isinf(x):
            return "inf" if x > 0 else "-inf"
        if np.isnan(x):
            return "nan"
        return format(x, ".17g")
    return str(x)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return format_number(x) if not np.isfinite(x) else x
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_number(v) for v in row])
    path.write_bytes(buf.getvalue().encode("utf-8"))


def _write_json(path: Path, obj) -> None:
    path.write_bytes((json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n").encode("utf-8"))


def _estimate_dict(est: DimensionEstimate) -> dict:
    return {"upper": est.upper, "lower": est.lower, "method": est.method, "fit_window": list(est.fit_window),
            "residual": est.residual, "zero_growth": est.zero_growth, "htop": est.htop,
            "classification": {format_number(k): v for k, v in est.classification.items()},
            "diagnostics": {k: v for k, v in est.diagnostics.items() if k != "history"}}


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

def _classical_counts(cfg: ExperimentConfig, sys: NdsSystem, K: SubsetSpec, threads: int):
    """Count records grouped by radius, and the count type."""
    h = cfg.horizon_list()
    if cfg.method == "classical-cylinder":
        model = symbolic_model(sys) if sys.family == "circle" else sys
        if model.family != "symbolic":
            raise ConfigError("cylinder counts need a symbolic or circle-multiplier system")
        if K.kind == "whole":
            series = cylinder_series(model, K, h)
            values = [None] * len(h)
            recs = [CountRecord(int(n), 2.0 ** -model.block, v, float(lv), "exact", "cylinder")
                    for n, v, lv in zip(h, values, series.log_values)]
        else:
            recs = _pmap(lambda n: exact_cylinder_count(model, K, int(n)), list(h), threads)
        return {2.0 ** -model.block: recs}
    counter = max_separated_count if cfg.method == "classical-separated" else min_spanning_count
    if sys.family == "symbolic":
        radii = [2.0 ** -int(j) for j in cfg.depths]
        length = (int(h[-1]) - 1) * sys.block + max(int(j) for j in cfg.depths)
        if sys.phase.alphabet ** length > 2 ** 16:
            raise ConfigError("symbolic separated/spanning samples are capped at 2**16 words")
        sample = word_sample(sys, length, K if K.kind != "points" else None)
    else:
        radii = [float(e) for e in cfg.epsilons]
        sample = K
    jobs = [(eps, int(n)) for eps in radii for n in h]
    recs = _pmap(lambda job: counter(sys, sample, job[1], job[0]), jobs, threads)
    grouped: dict[float, list] = {}
    for (eps, _), r in zip(jobs, recs):
        grouped.setdefault(eps, []).append(r)
    return grouped


def _best_estimate(grouped: dict) -> tuple[float, DimensionEstimate, CountSeries]:
    """The radius with the largest upper estimate (the epsilon -> 0 supremum)."""
    best = None
    for eps in sorted(grouped, reverse=True):
        series = CountSeries.from_records(grouped[eps])
        est = estimate_dimension(series)
        if best is None or est.upper > best[1].upper + 1e-12:
            best = (eps, est, series)
    return best


def run_experiment(cfg: ExperimentConfig | dict, out_dir: str | os.PathLike | None = None,
                   threads: int | None = None) -> Report:
    """Run one configured pipeline and write its CSV/JSON outputs."""
    if isinstance(cfg, dict):
        cfg = ExperimentConfig.from_dict(cfg)
    threads = resolve_threads(threads if threads is not None else cfg.threads)
    try:
        sys = build_system(cfg.system)
        K = _subset(cfg.subset, sys)
        K.check(sys.phase)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad system or subset: {exc}") from exc
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    report = Report(config=asdict(cfg))
    estimates: dict[str, Any] = {}

    if cfg.method == "pesin":
        pesin_sys = symbolic_model(sys) if sys.family == "circle" else sys
        PK = K
        if pesin_sys.family == "interval" and K.kind == "whole":
            PK = interval_grid(256)
        b = dict(cfg.bisection)
        sched = tuple(b.get("N_schedule", (4, 8, 16, 32)))
        Dmax = int(b.get("Dmax", 64))
        alphas = _pmap(lambda s: critical_alpha(pesin_sys, PK, float(s), sched, Dmax), list(cfg.s_grid), threads)
        pest = pesin_dimension(pesin_sys, PK, float(b.get("s_lo", 0.0)), float(b.get("s_hi", 2.0)),
                               float(b.get("width", 0.02)), tuple(b.get("scales", (512, 1024, 2048, 4096))))
        inconclusive = [float(s) for s, a in zip(cfg.s_grid, alphas) if a.diagnostics.get("inconclusive")]
        report.entropy = [(float(s), a.value, a.kind, a.ratio) for s, a in zip(cfg.s_grid, alphas)]
        estimates["pesin"] = _estimate_dict(pest)
        estimates["critical_alpha"] = {format_number(float(s)): {"value": a.value, "kind": a.kind}
                                       for s, a in zip(cfg.s_grid, alphas)}
        estimates["inconclusive_s"] = inconclusive
        if pesin_sys.family == "symbolic" and K.kind != "points":
            classical = estimate_dimension(cylinder_series(pesin_sys, K, cfg.horizon_list()))
            estimates["classical"] = _estimate_dict(classical)
            estimates["ordering_pesin_le_classical"] = bool(
                pest.upper <= classical.lower + CLASSICAL_TOL and classical.lower <= classical.upper + 1e-12)
        report.estimates = estimates
        if out_dir is not None:
            _emit(report, cfg, Path(out_dir), series=None)
        if inconclusive:
            raise NumericError(f"pesin classification inconclusive at s = {inconclusive}")
        return report

    grouped = _classical_counts(cfg, sys, K, threads)
    eps, est, series = _best_estimate(grouped)
    report.counts = [r for e in sorted(grouped, reverse=True) for r in grouped[e]]
    report.entropy = []
    for s in cfg.s_grid:
        up, lo = s_entropy(series, float(s))
        report.entropy.append((float(s), up, lo, classify_entropy(series, float(s))))
    estimates["classical"] = _estimate_dict(est)
    estimates["classical"]["epsilon"] = eps
    estimates["htop"] = est.htop
    report.estimates = estimates
    if out_dir is not None:
        _emit(report, cfg, Path(out_dir), series=series)
    return report


def _emit(report: Report, cfg: ExperimentConfig, out: Path, series: CountSeries | None) -> None:
    out.mkdir(parents=True, exist_ok=True)
    pre = cfg.output
    _write_csv(out / f"{pre}counts.csv", ["n", "epsilon", "value", "log_value", "kind", "count_type"],
               [(r.n, r.epsilon, r.value if r.value is not None else "", r.log_value, r.kind, r.count_type)
                for r in report.counts])
    if cfg.method == "pesin":
        _write_csv(out / f"{pre}entropy.csv", ["s", "critical_alpha", "kind", "scale_ratio"], report.entropy)
    else:
        _write_csv(out / f"{pre}entropy.csv", ["s", "upper_tail", "lower_tail", "classification"], report.entropy)
    _write_json(out / f"{pre}estimate.json", report.estimates)
    rows = []
    if series is not None:
        for s in cfg.s_grid:
            for n, v in zip(series.horizons, series.log_values):
                rows.append((int(n), float(v), float(s), float(v) / float(n) ** float(s)))
    _write_csv(out / f"{pre}plotdata.csv", ["n", "log_count", "s", "normalized"], rows)
    _write_json(out / f"{pre}report.json", report.to_dict())


# ---------------------------------------------------------------------------
# property suite
# ---------------------------------------------------------------------------

def corrupted_join(U, V):
    """Fault-injection join: refines the true join one extra cylinder level."""
    J = join(U, V)
    if J.phase_kind != "symbolic":
        return J
    depth = max(e.depth for e in J.elements) + 1
    return join(J, cylinder_cover(J.space, depth, J.alphabet))


def _random_symbolic(rng: np.random.Generator) -> NdsSystem:
    m = int(rng.integers(2, 4))
    if rng.random() < 0.5:
        block = [int(v) for v in rng.integers(1, m + 1, size=int(rng.integers(1, 4)))]
        if max(block) == 1:
            block[0] = m
        spec = {"family": "symbolic", "alphabet": m, "branching": {"rule": "periodic", "values": block}}
    else:
        sigma = float(rng.choice([0.3, 0.4, 0.5, 0.6, 0.7, 0.8]))
        spec = {"family": "symbolic", "alphabet": m,
                "branching": {"rule": "intermittent", "exponent": sigma, "high": m}}
    return build_system(spec)


def _random_forbidden(rng: np.random.Generator, m: int, count: int | None = None) -> list[tuple[int, int]]:
    pairs = [(a, b) for a in range(m) for b in range(m)]
    count = int(rng.integers(1, max(2, len(pairs) // 2))) if count is None else count
    idx = rng.choice(len(pairs), size=min(count, len(pairs)), replace=False)
    return [pairs[i] for i in sorted(idx)]


def _nonempty(sys: NdsSystem, K: SubsetSpec, length: int = 8) -> bool:
    return len(allowed_words(sys, K, length)) > 0


def _random_cover(rng: np.random.Generator, sys: NdsSystem, depth: int):
    """A random cylinder cover: a random grouping of depth-``depth`` words plus overlaps."""
    words = allowed_words(sys, SubsetSpec.whole(), depth, extend=0)
    groups = int(rng.integers(1, len(words) + 1))
    label = rng.integers(0, groups, size=len(words))
    sets = [frozenset(w for w, g in zip(words, label) if g == k) for k in range(groups)]
    sets = [s for s in sets if s]
    for _ in range(int(rng.integers(0, 3))):
        a, b = rng.integers(0, len(sets), size=2)
        sets.append(sets[int(a)] | sets[int(b)])
    return symbolic_cover([WordSet(depth, s) for s in sets], sys)


def _check(name: str, seed: int, ok: bool, **witness) -> Verdict:
    return Verdict(name, seed, bool(ok), {k: _jsonable(v) for k, v in witness.items()})


def _trial(seed: int, join_fn: Callable, heavy: bool) -> list[Verdict]:
    rng = np.random.default_rng(seed)
    out: list[Verdict] = []
    sys = _random_symbolic(rng)
    m = sys.phase.alphabet
    Z = SubsetSpec.subshift(_random_forbidden(rng, m))
    if not _nonempty(sys, Z):
        Z = SubsetSpec.whole()
    extra = _random_forbidden(rng, m, 1)
    Y = SubsetSpec.subshift(sorted(set(Z.forbidden) | set(extra))) if Z.kind == "subshift" else SubsetSpec.subshift(extra)
    if not _nonempty(sys, Y):
        Y = Z

    # covers: N(U v V) <= N(U) N(V), refinement and restriction monotonicity
    U = _random_cover(rng, sys, int(rng.integers(1, 3)))
    V = _random_cover(rng, sys, int(rng.integers(1, 3)))
    J = join_fn(U, V)
    nU, nV, nJ = (min_subcover_count(C, Z, sys).value for C in (U, V, J))
    out.append(_check("join_submultiplicative", seed, nJ <= nU * nV, N_UV=nJ, N_U=nU, N_V=nV, K=Z.forbidden))
    out.append(_check("join_refines", seed, refines(U, J), cover_sizes=(len(U), len(J))))
    out.append(_check("refinement_monotone", seed, nU <= nJ, N_U=nU, N_UV=nJ))
    nY, nZ, nW = (min_subcover_count(J, S, sys).value for S in (Y, Z, SubsetSpec.whole()))
    out.append(_check("restriction_monotone", seed, nY <= nZ <= nW, N_Y=nY, N_Z=nZ, N_X=nW,
                      Y=Y.forbidden, Z=Z.forbidden))
    n = int(rng.integers(1, 4))
    Un, Jn = dynamical_join(sys, U, n), dynamical_join(sys, J, n)
    out.append(_check("dynamical_join_refines", seed, refines(Un, Jn), n=n))
    P1 = pullback(sys, 1, 1, J)
    P2 = join(pullback(sys, 1, 1, U), pullback(sys, 1, 1, V))
    out.append(_check("pullback_distributes", seed, P1.same_sets(P2), sizes=(len(P1), len(P2))))

    # counts: products, conjugacy, monotonicity
    nn = int(rng.integers(1, 7))
    cnt = exact_cylinder_count(sys, None, nn).value
    enum = len(allowed_words(sys, SubsetSpec.whole(), nn * sys.block, extend=0))
    prod = int(np.prod(sys.branching(nn).astype(object)))
    out.append(_check("cylinder_count_product", seed, cnt == enum == prod, count=cnt, enumerated=enum, product=prod))
    perm = tuple(int(v) for v in rng.permutation(m))
    conj = conjugate_system(sys, SymbolPermutations((perm, tuple(range(m)))))
    same = all(exact_cylinder_count(conj, Z, k).value == exact_cylinder_count(sys, Z, k).value for k in range(1, 7))
    out.append(_check("conjugacy_counts", seed, same, perm=perm))
    cs = [exact_cylinder_count(sys, Z, k).value for k in range(1, 9)]
    out.append(_check("cylinder_count_monotone", seed, all(a <= b for a, b in zip(cs, cs[1:])), counts=cs))

    # spanning-certificate transfer to power systems
    k = int(rng.integers(2, 4))
    n2 = int(rng.integers(1, 3))
    j = int(rng.integers(1, 3))
    length = n2 * k + j
    sample = word_sample(sys, length)
    if len(sample.points) <= 4096:
        rec = min_spanning_count(sys, sample, n2 * k, 2.0 ** -j)
        ok = is_spanning(power_system(sys, k), sample, rec.members, n2, 2.0 ** -j)
        out.append(_check("power_spanning_transfer", seed, ok, k=k, n=n2, depth=j, centers=len(rec.members)))

    # separated/spanning bracketing on a 64-point circle grid
    sched = [int(v) for v in rng.integers(1, 4, size=int(rng.integers(1, 4)))]
    circ = build_system({"family": "circle_multiply", "schedule": {"rule": "periodic", "values": sched}})
    grid = circle_grid(64)
    n3 = int(rng.integers(1, 4))
    eps = float(rng.choice([0.05, 0.08, 0.1, 0.15, 0.2, 0.26]))
    s_eps = exhaustive_separated_count(circ, grid, n3, eps)
    s_2eps = exhaustive_separated_count(circ, grid, n3, 2 * eps)
    r_eps = exhaustive_spanning_count(circ, grid, n3, eps)
    g_lo = max_separated_count(circ, grid, n3, eps).value
    g_hi = min_spanning_count(circ, grid, n3, eps).value
    out.append(_check("sep_span_bracketing", seed, s_2eps <= r_eps <= s_eps and g_lo <= s_eps and g_hi >= r_eps,
                      schedule=sched, n=n3, eps=eps, s_2eps=s_2eps, r_eps=r_eps, s_eps=s_eps,
                      greedy_separated=g_lo, greedy_spanning=g_hi))

    # Pesin: M monotone in alpha and N, union supremum
    from .pesin import cost_profile

    s = float(rng.choice([0.5, 1.0, 1.5]))
    alphas = np.sort(rng.uniform(0, 2, size=5))
    # linear costs: a subset that dies out on a time-varying alphabet has M = 0
    profs = [np.exp(cost_profile(sys, Z, s, a, 16)[1:]) for a in alphas]
    mono_N = all(np.all(p[1:] >= p[:-1] * (1 - 1e-12)) for p in profs)
    mono_a = all(np.all(q <= p * (1 + 1e-12)) for p, q in zip(profs, profs[1:]))
    out.append(_check("cost_monotone", seed, mono_N and mono_a, s=s, alphas=alphas))
    full = build_system({"family": "full_shift", "alphabet": m})
    K1 = SubsetSpec.subshift(_random_forbidden(rng, m))
    K2 = SubsetSpec.subshift(_random_forbidden(rng, m))
    if _nonempty(full, K1) and _nonempty(full, K2):
        # unions of equal-entropy parts carry a ln 2 / Dmax transient, so go deeper
        a1, a2, a12 = (critical_alpha(full, S, 1.0, UNION_SCHEDULE, UNION_DMAX, check_extrapolation=False).value
                       for S in (K1, K2, SubsetSpec.union(K1, K2)))
        out.append(_check("union_sup", seed, abs(a12 - max(a1, a2)) <= 1e-3 + 1e-9, alpha_1=a1, alpha_2=a2,
                          alpha_union=a12, K1=K1.forbidden, K2=K2.forbidden))

    # subsequence ordering and the power rule on classical estimates
    horizons = geometric_horizons(1, 2 ** 14)
    i, jj = sorted(int(v) for v in rng.integers(1, 40, size=2))
    di = estimate_dimension(cylinder_series(shift_system(sys, i), None, horizons)).upper
    dj = estimate_dimension(cylinder_series(shift_system(sys, jj), None, horizons)).upper
    out.append(_check("subsequence_classical", seed, di <= dj + CLASSICAL_TOL, i=i, j=jj, D_i=di, D_j=dj))
    kk = int(rng.integers(2, 4))
    d1 = estimate_dimension(cylinder_series(sys, None, horizons)).upper
    dk = estimate_dimension(cylinder_series(power_system(sys, kk), None, geometric_horizons(1, 2 ** 14 // kk))).upper
    ok = dk <= d1 + CLASSICAL_TOL
    if sys.schedule.period is not None:
        ok = ok and abs(dk - d1) <= CLASSICAL_TOL
    out.append(_check("power_rule_classical", seed, ok, k=kk, D=d1, D_k=dk, periodic=sys.schedule.period is not None))

    if heavy:
        out.extend(_compare_chain(seed, sys, i, jj))
    return out


UNION_DMAX = 512
UNION_SCHEDULE = (32, 64, 128, 256)


def _compare_chain(seed: int, sys: NdsSystem, i: int, j: int) -> list[Verdict]:
    horizons = geometric_horizons(1, 2 ** 16)
    scales = (256, 512, 1024, 2048)
    cl = estimate_dimension(cylinder_series(sys, None, horizons))
    pe = pesin_dimension(sys, scales=scales).upper
    chain = pe <= cl.lower + CLASSICAL_TOL and cl.lower <= cl.upper + 1e-12
    out = [_check("compare_chain", seed, chain, pesin=pe, lower=cl.lower, upper=cl.upper)]
    pi = pesin_dimension(shift_system(sys, i), scales=scales).upper
    pj = pesin_dimension(shift_system(sys, j), scales=scales).upper
    out.append(_check("subsequence_pesin", seed, pi <= pj + PESIN_TOL, i=i, j=j, D_i=pi, D_j=pj))
    return out


def property_suite(seed: int = 1, trials: int = 200, threads: int | None = None,
                   join_fn: Callable | None = None, heavy_every: int = 4) -> Report:
    """Randomized invariant checks over ``trials`` symbolic instances.

    Trial ``t`` uses the generator seeded by ``(seed, t)``; every
    ``heavy_every``-th trial also runs the Pesin comparison chain.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    threads = resolve_threads(threads)
    join_fn = join_fn or join
    seeds = [int(np.random.SeedSequence([seed, t]).generate_state(1)[0]) for t in range(trials)]
    results = _pmap(lambda t: _trial(seeds[t], join_fn, heavy_every > 0 and t % heavy_every == 0),
                    list(range(trials)), threads)
    report = Report(config={"seed": seed, "trials": trials})
    report.verdicts = [v for r in results for v in r]
    names = sorted({v.name for v in report.verdicts})
    report.estimates = {"checks": {n: {"passed": sum(v.passed for v in report.verdicts if v.name == n),
                                       "failed": sum(not v.passed for v in report.verdicts if v.name == n)}
                                   for n in names}}
    return report


# ---------------------------------------------------------------------------
# the example table
# ---------------------------------------------------------------------------

FINITE_EXAMPLE = {"family": "finite", "distances": [[0, 0.2, 0.5], [0.2, 0, 0.4], [0.5, 0.4, 0]],
                  "maps": [[1, 2, 0], [0, 2, 1]], "label": "finite-3"}
CONTRACTION_EXAMPLE = {"family": "contraction", "c": 0.5, "label": "contraction-0.5"}
EXAMPLE_SIGMAS = (0.3, 0.5, 0.7)
SEPARATED_RADII = (2.0 ** -4, 2.0 ** -5, 2.0 ** -6, 2.0 ** -7)


def _degenerate_row(name: str, sys: NdsSystem, K: SubsetSpec, pesin_K: SubsetSpec, threads: int) -> dict:
    h = geometric_horizons(1, 64)
    jobs = [(e, int(n)) for e in SEPARATED_RADII for n in h]
    recs = _pmap(lambda job: max_separated_count(sys, K, job[1], job[0]), jobs, threads)
    grouped: dict[float, list] = {}
    for (e, _), r in zip(jobs, recs):
        grouped.setdefault(e, []).append(r)
    _, est, series = _best_estimate(grouped)
    pe = pesin_dimension(sys, pesin_K, scales=(64, 128, 256))
    return {"system": name, "htop": est.htop, "classical_upper": est.upper, "classical_lower": est.lower,
            "pesin": pe.upper, "zero_growth": est.zero_growth and pe.zero_growth,
            "predicted": "0", "predicted_pesin": "0"}


def _symbolic_row(name: str, sys: NdsSystem, n_max: int, predicted: str, predicted_pesin: str) -> dict:
    series = cylinder_series(sys, None, geometric_horizons(1, n_max))
    est = estimate_dimension(series)
    pe = pesin_dimension(sys)
    return {"system": name, "htop": est.htop, "classical_upper": est.upper, "classical_lower": est.lower,
            "pesin": pe.upper, "zero_growth": est.zero_growth, "predicted": predicted,
            "predicted_pesin": predicted_pesin}


def reproduce_section4(out_dir: str | os.PathLike | None = None, threads: int | None = None) -> Report:
    """The worked examples: finite space, contraction, intermittent circles, full-shift control."""
    threads = resolve_threads(threads)
    finite = build_system(FINITE_EXAMPLE)
    contraction = build_system(CONTRACTION_EXAMPLE)
    jobs: list[Callable[[], dict]] = [
        lambda: _degenerate_row("finite-3", finite, SubsetSpec.whole(), SubsetSpec.whole(), 1),
        lambda: _degenerate_row("contraction-0.5", contraction, interval_grid(4096), interval_grid(256), 1),
    ]
    for sigma in EXAMPLE_SIGMAS:
        circ = build_system({"family": "intermittent_circle", "m": 2, "exponent": sigma,
                             "label": f"intermittent-{sigma}"})
        jobs.append(lambda circ=circ, sigma=sigma: _symbolic_row(
            f"intermittent-{sigma}", symbolic_model(circ), 10 ** 6, str(sigma), f"(0, {sigma}]"))
    full = build_system({"family": "full_shift", "alphabet": 2, "label": "full-2-shift"})
    jobs.append(lambda: _symbolic_row("full-2-shift", full, 2 ** 14, "1", "1"))
    rows = _pmap(lambda f: f(), jobs, threads)
    # the worker count stays out of the outputs so they are byte-identical across pools
    report = Report(config={}, table=rows)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        cols = ["system", "htop", "classical_upper", "classical_lower", "pesin", "zero_growth", "predicted",
                "predicted_pesin"]
        _write_csv(out / "section4.csv", cols, [[r[c] for c in cols] for r in rows])
        _write_json(out / "report.json", report.to_dict())
    return report
