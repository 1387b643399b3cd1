"""
Command-Line Interface
hardsphere-lab validate | run | fit | report
"""

import argparse
import json
import logging
from pathlib import Path
import sys

from .core import settings
from .core.errors import ConfigError, FitError, LabError
from .study.checks import list_checks, run_checks
from .study.config import load_config, validate_config
from .study.rates import summarize
from .study.runner import load_rates, run_study

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INPUT = 2


def parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        prog="hardsphere-lab",
        description="Low Mach number convergence studies for compressible flow with a hard-sphere pressure law.",
    )
    parser.add_argument("verb", choices=["validate", "run", "fit", "report"])
    parser.add_argument("--config", type=Path, help="Study configuration (JSON)")
    parser.add_argument("--out", type=Path, help="Output directory (default: config output_dir)")
    parser.add_argument(
        "--only",
        help=f"Run a single self-check instead of a study, or 'all'. Checks: {', '.join(list_checks())}",
    )
    parser.add_argument("--seed", type=int, help="Override the config seed")
    parser.add_argument("--resolution-override", type=int, dest="cells", help="Override the config cell count")
    return parser.parse_args(argv)


def _print(payload: dict) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True, default=str))


def _load(args):
    if args.config is None:
        raise ConfigError("--config is required for this verb")
    overrides = {"seed": args.seed, "cells": args.cells}
    if args.out is not None:
        overrides["output_dir"] = str(args.out)
    return load_config(args.config, **overrides)


def _validate(args) -> int:
    study = validate_config(_load(args))
    _print(study.to_dict())
    return EXIT_OK


def _run(args) -> int:
    if args.only:
        results = run_checks(None if args.only == "all" else args.only, args.out)
        _print(results)
        return EXIT_OK if all(r["passed"] for r in results.values()) else EXIT_FAILED
    study = validate_config(_load(args))
    report = run_study(study, out_dir=args.out)
    _print({"flags": report.flags, "notes": report.notes, "failed": report.failed})
    return EXIT_OK if report.passed else EXIT_FAILED


def _results_dir(args) -> Path:
    if args.out is not None:
        return args.out
    if args.config is not None:
        return Path(_load(args).output_dir)
    return Path(settings.OUTPUT_DIR)


def _fit(args) -> int:
    """Refit the slopes of an existing rates.csv"""
    out_dir = _results_dir(args)
    report = summarize(load_rates(out_dir / "rates.csv"))
    _print(report.to_dict())
    return EXIT_OK if report.passed else EXIT_FAILED


def _fmt(value) -> str:
    return "n/a" if value is None else f"{value:.4e}"


def _report(args) -> int:
    out_dir = _results_dir(args)
    path = out_dir / "report.json"
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise FitError(f"Cannot read {path}: {e}")
    report = payload["report"]
    for row in report["rows"]:
        print(
            f"eps={row['eps']:<10.4g} nu={row['nu']:<10.4g} R={row['R']:<10.4g} "
            f"vel_gap={_fmt(row['sup_vel_gap'])} dens_gap={_fmt(row['sup_dens_gap'])} "
            f"bound={_fmt(row['rhs_bound'])} rei={'pass' if row['rei_pass'] else 'FAIL'}"
        )
    for name, ok in sorted(report["flags"].items()):
        print(f"{name}: {'pass' if ok else 'FAIL'}")
    if payload.get("config_hash"):
        print(f"config_hash: {payload['config_hash']}")
    return EXIT_OK if report["passed"] else EXIT_FAILED


VERBS = {"validate": _validate, "run": _run, "fit": _fit, "report": _report}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=getattr(logging, settings.LOG_LEVEL, logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    args = parse_args(argv)
    try:
        return VERBS[args.verb](args)
    except (ConfigError, FitError) as e:
        print(f"[error] {e}", file=sys.stderr)
        return EXIT_INPUT
    except (LabError, OSError) as e:
        logger.error(f"{args.verb} failed: {type(e).__name__}: {e}")
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
