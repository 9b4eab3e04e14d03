"""``geogate run <scenario-file>`` entry point."""

from __future__ import annotations

import argparse
import sys

from .config import ConfigError, load_config
from .runner import EXIT_CONFIG, run_scenario
from .scenarios import SCHEMAS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="geogate", description="Run geometric-gate scenarios.")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a scenario file")
    run.add_argument("scenario_file")
    run.add_argument("--out", default=None, help="output directory (default: current directory)")
    run.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--fock-cutoff", type=int, default=None)
    run.add_argument("--seed", type=int, default=None)
    sub.add_parser("list", help="list scenarios and their keys")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else 0
    if args.command == "list":
        for name, schema in SCHEMAS.items():
            print(f"{name}: {', '.join(schema)}")
        return 0
    try:
        config = load_config(
            args.scenario_file,
            SCHEMAS,
            overrides=args.override,
            fock_cutoff=args.fock_cutoff,
            seed=args.seed,
            out=args.out,
            workers=args.workers,
        )
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    output = run_scenario(config)
    summary = output.summary
    if output.exit_code:
        print(f"{summary['status']}: {summary.get('message')}", file=sys.stderr)
    elif config.sweeps:
        print(f"{summary['points']} points, {summary['failed']} failed")
    else:
        for key, value in summary.get("metrics", {}).items():
            print(f"{key} = {value}")
    return output.exit_code


if __name__ == "__main__":
    sys.exit(main())
