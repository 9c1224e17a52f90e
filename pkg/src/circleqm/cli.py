"""Command-line scenario runner.

Exit codes: 0 success, 1 config error, 2 invariant violation, 3 I/O error.
"""

from __future__ import annotations

import argparse
import sys
import warnings

from .lattice import WrapWarning
from .scenario import (
    WRAP_POLICIES,
    ConfigError,
    bundled_scenarios,
    emit_report,
    load_scenario,
    run_scenario,
)

EXIT_OK, EXIT_CONFIG, EXIT_VIOLATION, EXIT_IO = 0, 1, 2, 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="circleqm",
        description="Run angular-momentum conservation scenarios and write reports.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario file or bundled scenario")
    run.add_argument("scenario", help="path to a YAML/JSON scenario, or a bundled scenario name")
    run.add_argument("-o", "--output", help="report path (default: stdout)")
    run.add_argument("-f", "--format", choices=("json", "csv"), default="json")
    run.add_argument("--seed", type=int, help="override the sampling seed")
    run.add_argument("--trials", type=int, help="sample this many trials (switches to sample mode)")
    run.add_argument("--wrap-policy", choices=WRAP_POLICIES, help="override the config's wrap policy")
    run.add_argument("--timestamp", action="store_true", help="add a generation timestamp to json output")

    sub.add_parser("list", help="list bundled scenarios")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        print("\n".join(bundled_scenarios()))
        return EXIT_OK

    try:
        config = load_scenario(args.scenario)
    except ConfigError as exc:
        print(f"circleqm: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"circleqm: {exc}", file=sys.stderr)
        return EXIT_IO

    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", WrapWarning)
            report = run_scenario(
                config,
                seed=args.seed,
                trials=args.trials,
                wrap_policy=args.wrap_policy,
                timestamp=args.timestamp,
            )
        for w in caught:
            print(f"circleqm: warning: {w.message}", file=sys.stderr)
    except ValueError as exc:
        # ConfigError and WrapError are ValueErrors too
        print(f"circleqm: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        text = emit_report(report, args.format, args.output)
    except OSError as exc:
        print(f"circleqm: cannot write report: {exc}", file=sys.stderr)
        return EXIT_IO
    if args.output is None:
        sys.stdout.write(text)

    if report.violations:
        for v in report.violations:
            print(f"circleqm: invariant violation: {v}", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
