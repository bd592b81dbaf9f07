"""
Command line entry point.

Commands:
  validate  check a scenario file and its sweep plan
  simulate  run one pass per seed and write grids, video and a manifest
  analyze   extract pattern cuts from a saved grid and locate nulls
  report    render a Markdown summary of an output directory

Usage:
  nsr-sim validate --config configs/cosmo_demo.yaml
  nsr-sim simulate --config configs/cosmo_demo.yaml --out out/demo --seed 1,2
  nsr-sim analyze --grid out/demo/seed_1/nsr_grid.csv --freq 9551,9614.5 --config configs/cosmo_demo.yaml
  nsr-sim analyze --grid out/demo/seed_1/nsr_grid.csv --config configs/cosmo_demo.yaml
  nsr-sim report --run-dir out/demo
"""

import argparse
import logging
import os
import sys
from typing import List, Optional

from .config import LOG_LEVEL_ENV
from .stages import analyze, report, simulate, validate

logger = logging.getLogger(__name__)


def _int_list(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(',') if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _mhz_list(text: str) -> List[float]:
    try:
        return [float(part) * 1e6 for part in text.split(',') if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated MHz values, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nsr-sim",
                                     description="Narrowband sweeper receiver simulator")
    parser.add_argument("--log-level", default=None,
                        help=f"Logging level (default INFO, or ${LOG_LEVEL_ENV})")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p_validate = sub.add_parser("validate", help="Validate a scenario file")
    p_validate.add_argument("--config", required=True, help="Scenario YAML")

    p_simulate = sub.add_parser("simulate", help="Simulate passes for each seed")
    p_simulate.add_argument("--config", required=True, help="Scenario YAML")
    p_simulate.add_argument("--out", default=None, help="Output directory")
    p_simulate.add_argument("--seed", type=_int_list, default=None, help="Comma-separated seeds")
    p_simulate.add_argument("--format", choices=["csv", "json"], action="append", default=None,
                            help="Grid format, repeatable")
    p_simulate.add_argument("--iq-dump", action="store_true", default=None,
                            help="Also write a sample-level I/Q snippet per seed")

    p_analyze = sub.add_parser("analyze", help="Extract pattern cuts from a grid")
    p_analyze.add_argument("--grid", required=True, help="NSR grid CSV or JSON")
    p_analyze.add_argument("--freq", type=_mhz_list, default=None,
                           help="Comma-separated cut frequencies in MHz, "
                                "defaults to output.analysis_frequencies_hz of --config")
    p_analyze.add_argument("--config", default=None, help="Scenario YAML for angles and comparison")
    p_analyze.add_argument("--sed", default=None, help="Wideband video CSV from the same run")
    p_analyze.add_argument("--out", default=None, help="Output directory")
    p_analyze.add_argument("--format", choices=["csv", "json"], default="csv")
    p_analyze.add_argument("--prominence-db", type=float, default=6.0)

    p_report = sub.add_parser("report", help="Render a Markdown report")
    p_report.add_argument("--run-dir", required=True, help="Directory holding manifest.json")
    p_report.add_argument("--output", default=None, help="Report path")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = (args.log_level or os.environ.get(LOG_LEVEL_ENV) or 'INFO').upper()
    logging.basicConfig(level=getattr(logging, level, logging.INFO),
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')

    if args.cmd == "validate":
        result = validate.run(args.config)
    elif args.cmd == "simulate":
        result = simulate.run(args.config, out_dir=args.out, seeds=args.seed,
                              formats=args.format, iq_dump=args.iq_dump)
    elif args.cmd == "analyze":
        result = analyze.run(args.grid, args.freq, config_path=args.config, sed_path=args.sed,
                             out_dir=args.out, fmt=args.format, prominence_db=args.prominence_db)
    else:
        result = report.run(args.run_dir, output=args.output)

    for message in result.get('violations', []) + result.get('errors', []):
        print(message, file=sys.stderr)
    return int(result['statusCode'])


if __name__ == "__main__":
    sys.exit(main())
