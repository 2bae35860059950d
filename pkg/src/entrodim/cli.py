"""Command line: ``entrodim estimate|properties|section4``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .harness import ConfigError, NumericError, load_config, property_suite, reproduce_section4, run_experiment

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="entrodim", description=__doc__)
    p.add_argument("--out", default="entrodim_out", help="output directory")
    p.add_argument("--threads", type=int, default=None, help="worker count (default: $ENTRODIM_THREADS or 1)")
    sub = p.add_subparsers(dest="command", required=True)
    est = sub.add_parser("estimate", help="run one configured experiment")
    est.add_argument("--config", required=True)
    prop = sub.add_parser("properties", help="randomized property suite")
    prop.add_argument("--seed", type=int, default=1)
    prop.add_argument("--trials", type=int, default=200)
    sub.add_parser("section4", help="the worked examples table")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    out = Path(args.out)
    try:
        if args.command == "estimate":
            report = run_experiment(load_config(args.config), out, args.threads)
            print(json.dumps(report.to_dict()["estimates"], indent=2, sort_keys=True))
            return EXIT_OK
        if args.command == "properties":
            report = property_suite(args.seed, args.trials, args.threads)
            out.mkdir(parents=True, exist_ok=True)
            (out / "report.json").write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
            for name, c in report.estimates["checks"].items():
                print(f"{name:28s} passed={c['passed']:4d} failed={c['failed']:4d}")
            for v in report.failures:
                print(f"FAIL {v.name} seed={v.seed} witness={v.witness}")
            return EXIT_OK if not report.failures else EXIT_FAIL
        report = reproduce_section4(out, args.threads)
        for row in report.table:
            print(", ".join(f"{k}={v}" for k, v in row.items()))
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
