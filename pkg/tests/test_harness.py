import json

import numpy as np
import pytest

from entrodim import cli
from entrodim.harness import (ConfigError, ExperimentConfig, NumericError, corrupted_join, format_number,
                              load_config, property_suite, reproduce_section4, resolve_threads, run_experiment)

FULL = {"system": {"family": "full_shift", "alphabet": 2}, "horizons": {"n_min": 1, "n_max": 16384}}
FINITE = {"system": {"family": "finite", "distances": [[0, 0.2, 0.5], [0.2, 0, 0.3], [0.5, 0.3, 0]],
                     "maps": [[1, 2, 0], [0, 0, 2]]},
          "method": "classical-separated", "horizons": [1, 2, 4, 8, 16, 32, 64]}
PESIN = {"system": {"family": "intermittent_symbolic", "m": 2, "exponent": 0.5}, "method": "pesin",
         "horizons": {"n_min": 1, "n_max": 1000000}, "s_grid": [0.5, 1.0]}


@pytest.mark.parametrize("raw", [
    {"system": {"family": "full_shift"}, "bogus": 1},
    {"horizons": [1, 2]},
    {"system": {"family": "full_shift"}, "method": "magic"},
    {"system": {"family": "full_shift"}, "horizons": [4, 2]},
    {"system": {"family": "full_shift"}, "bisection": {"depth": 3}},
    {"system": {"family": "full_shift"}, "epsilons": [0.1, -1]},
    {"system": {"family": "full_shift"}, "threads": 0},
])
def test_config_rejected(raw):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(raw)


def test_bad_system_is_config_error(tmp_path):
    with pytest.raises(ConfigError):
        run_experiment({"system": {"family": "nope"}}, tmp_path)
    with pytest.raises(ConfigError):
        run_experiment({"system": {"family": "full_shift"}, "subset": {"kind": "odd"}}, tmp_path)


def test_load_config(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps(FULL))
    assert load_config(p).system["family"] == "full_shift"
    p.write_text("{nope")
    with pytest.raises(ConfigError):
        load_config(p)


def test_full_shift_experiment(tmp_path):
    r = run_experiment(FULL, tmp_path)
    est = r.estimates["classical"]
    assert abs(est["upper"] - 1) <= 0.02 and abs(est["lower"] - 1) <= 0.02
    for name in ("counts.csv", "entropy.csv", "plotdata.csv", "estimate.json", "report.json"):
        assert (tmp_path / name).exists()
    raw = (tmp_path / "counts.csv").read_bytes()
    assert b"\r" not in raw
    header, first = raw.decode().splitlines()[:2]
    assert header == "n,epsilon,value,log_value,kind,count_type"
    assert first.split(",")[3] == format(float(np.log(2)), ".17g")
    plot = (tmp_path / "plotdata.csv").read_text().splitlines()[0]
    assert plot == "n,log_count,s,normalized"


def test_finite_experiment(tmp_path):
    est = run_experiment(FINITE, tmp_path).estimates["classical"]
    assert est["upper"] == est["lower"] == 0 and est["zero_growth"]


def test_pesin_experiment(tmp_path):
    r = run_experiment(PESIN, tmp_path)
    assert 0 < r.estimates["pesin"]["upper"] <= 0.52
    assert r.estimates["ordering_pesin_le_classical"]


def test_experiment_thread_independent(tmp_path):
    for t in (1, 3):
        run_experiment(FULL, tmp_path / str(t), threads=t)
    for name in ("counts.csv", "entropy.csv", "plotdata.csv", "estimate.json"):
        assert (tmp_path / "1" / name).read_bytes() == (tmp_path / "3" / name).read_bytes()


def test_format_number():
    assert format_number(0.1) == "0.10000000000000001"
    assert format_number(3) == "3"
    assert format_number(True) == "true"
    assert format_number(float("inf")) == "inf"


def test_threads_env(monkeypatch):
    monkeypatch.setenv("ENTRODIM_THREADS", "4")
    assert resolve_threads(None) == 4
    assert resolve_threads(2) == 2
    monkeypatch.delenv("ENTRODIM_THREADS")
    assert resolve_threads(None) == 1


def test_property_suite_small():
    r = property_suite(seed=3, trials=8)
    assert not r.failures
    assert r.estimates["checks"]["union_sup"]["passed"] == 8


def test_mutation_hook_detected():
    r = property_suite(seed=1, trials=6, join_fn=corrupted_join, heavy_every=0)
    names = {v.name for v in r.failures}
    assert "join_submultiplicative" in names
    bad = next(v for v in r.failures if v.name == "join_submultiplicative")
    assert bad.witness and bad.seed is not None


def test_compare_chain_seed2():
    r = property_suite(seed=2, trials=50, heavy_every=1, threads=4)
    chain = [v for v in r.verdicts if v.name == "compare_chain"]
    assert len(chain) == 50 and all(v.passed for v in chain)


def test_section4_rows(tmp_path):
    rows = {r["system"]: r for r in reproduce_section4(tmp_path).table}
    assert (rows["finite-3"]["classical_upper"], rows["finite-3"]["classical_lower"], rows["finite-3"]["pesin"]) == (0, 0, 0)
    assert abs(rows["intermittent-0.5"]["classical_upper"] - 0.5) <= 0.05
    full = rows["full-2-shift"]
    assert abs(full["htop"] - np.log(2)) <= 0.01
    assert abs(full["classical_upper"] - 1) <= 0.02 and abs(full["classical_lower"] - 1) <= 0.02


def test_cli_exit_codes(tmp_path, monkeypatch, capsys):
    good = tmp_path / "good.json"
    good.write_text(json.dumps(FULL))
    assert cli.main(["--out", str(tmp_path / "o"), "estimate", "--config", str(good)]) == 0
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({**FULL, "extra": 1}))
    assert cli.main(["--out", str(tmp_path / "o"), "estimate", "--config", str(bad)]) == 2

    def boom(*a, **k):
        raise NumericError("inconclusive")

    monkeypatch.setattr(cli, "run_experiment", boom)
    assert cli.main(["--out", str(tmp_path / "o"), "estimate", "--config", str(good)]) == 3
    assert cli.main(["--out", str(tmp_path / "p"), "properties", "--seed", "1", "--trials", "2"]) == 0
    assert (tmp_path / "p" / "report.json").exists()


def test_cli_property_failures_exit_1(tmp_path, monkeypatch):
    import entrodim.harness as h

    real = h.property_suite
    monkeypatch.setattr(cli, "property_suite",
                        lambda seed, trials, threads: real(seed, trials, threads, join_fn=corrupted_join, heavy_every=0))
    assert cli.main(["--out", str(tmp_path), "properties", "--seed", "1", "--trials", "2"]) == 1
