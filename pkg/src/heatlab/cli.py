"""Command-line entry point.

    heatlab <experiment> --config FILE [--check] [--out DIR]
                         [--seed N] [--reps N] [--workers N]

Exit codes: 0 when the run's checks all pass (or --check validates), 2 when
the run completes but a check fails, 64 for usage and configuration errors,
1 for resource exhaustion or unexpected runtime failures.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .errors import (CapabilityError, ConfigurationError, DomainError,
                     GridAlignmentError, ResourceError, UsageError)
from .harness import (EXPERIMENT_NAMES, config_hash, load_config,
                      run_experiment, write_record)

EXIT_OK = 0
EXIT_CHECK_FAILED = 2
EXIT_USAGE = 64
EXIT_RUNTIME = 1

_USAGE_ERRORS = (UsageError, ConfigurationError, DomainError,
                 GridAlignmentError)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="heatlab",
                     description="Monte Carlo laboratory for a stochastic "
                                 "heat equation")
    sub = parser.add_subparsers(dest="experiment", metavar="<experiment>")
    sub.required = True
    for name in EXPERIMENT_NAMES:
        p = sub.add_parser(name, prog=f"heatlab {name}")
        p.add_argument("--config", required=True, metavar="FILE",
                       help="YAML config; partial files are merged over "
                            "the family defaults")
        p.add_argument("--check", action="store_true",
                       help="validate the config and exit")
        p.add_argument("--out", metavar="DIR", default=None,
                       help="directory for rows CSV and summary JSON")
        p.add_argument("--seed", type=int, default=None, metavar="N",
                       help="override the master seed")
        p.add_argument("--reps", type=int, default=None, metavar="N",
                       help="override budgets.replications")
        p.add_argument("--workers", type=int, default=1, metavar="N",
                       help="worker processes (never affects results)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        cfg = load_config(args.config)
        if cfg.experiment != args.experiment:
            raise UsageError(
                f"config is for experiment {cfg.experiment!r}, "
                f"command was {args.experiment!r}")
        if args.seed is not None:
            cfg = dataclasses.replace(cfg, seed=args.seed)
        if args.reps is not None:
            cfg = dataclasses.replace(
                cfg, budgets={**cfg.budgets, "replications": args.reps})
        out_dir = args.out if args.out is not None else cfg.output

        if args.check:
            print(f"config ok: {cfg.experiment} (hash {config_hash(cfg)})")
            return EXIT_OK

        record = run_experiment(cfg, workers=args.workers)
        for c in record.summary["checks"]:
            state = "PASS" if c["passed"] else "FAIL"
            print(f"{state} {c['name']}: {c['detail']}")
        print(f"{record.experiment}: config {record.config_hash[:12]}, "
              f"{len(record.rows)} rows, {record.wall_clock_s:.1f}s")
        if out_dir is not None:
            rows_path, summary_path = write_record(record, out_dir)
            print(f"wrote {rows_path} and {summary_path}")
        return EXIT_OK if record.passed else EXIT_CHECK_FAILED
    except _USAGE_ERRORS as e:
        print(f"heatlab: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ResourceError, CapabilityError) as e:
        print(f"heatlab: error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
