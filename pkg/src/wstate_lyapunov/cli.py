"""Command line: ``run <config>`` and ``sweep <config> --param NAME --values LIST``.

Exit status: 0 on success, 1 when ``--check`` is given and an embedded
expectation fails, 2 on a configuration error, 3 when the integrated state
leaves the physical set.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import ConfigError, load_raw, parse_config
from .dynamics import StateInvalid
from .scenarios import run_scenario, sweep

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_STATE = 3


def parse_values(text: str) -> list[float]:
    """Comma-separated numbers; the empty string is an empty list."""
    items = [s.strip() for s in text.split(",") if s.strip()]
    try:
        return [float(s) for s in items]
    except ValueError:
        raise ConfigError("--values", f"expected comma-separated numbers, got {text!r}") from None


def _overrides(args) -> dict:
    out = {}
    if args.dt is not None:
        out["dt"] = args.dt
    if args.t_end is not None:
        out["t_end"] = args.t_end
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wstate-lyapunov",
        description="Lyapunov-controlled W-state generation in a three-node network.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", type=Path)
    common.add_argument("--out", type=Path, default=None,
                        help="output directory (default: output_path from the config)")
    common.add_argument("--dt", type=float, default=None)
    common.add_argument("--t-end", type=float, default=None)
    common.add_argument("--check", action="store_true",
                        help="exit 1 if an expectation embedded in the config fails")

    sub.add_parser("run", parents=[common], help="run one scenario")
    sw = sub.add_parser("sweep", parents=[common], help="run a scenario once per parameter value")
    sw.add_argument("--param", required=True, help="dotted field, e.g. model.eta")
    sw.add_argument("--values", required=True, help="comma-separated values")
    sw.add_argument("--workers", type=int, default=1)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        raw = load_raw(args.config)
        cfg = parse_config(raw)
        if args.command == "run":
            summary = run_scenario(cfg, args.out, _overrides(args))
        else:
            values = parse_values(args.values)
            summary = sweep(raw, args.param, values, args.out, _overrides(args), args.workers)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StateInvalid as exc:
        print(f"invalid state: {exc}", file=sys.stderr)
        return EXIT_STATE

    json.dump(summary, sys.stdout, indent=2, sort_keys=True, default=str)
    sys.stdout.write("\n")
    if args.check and not all(c["passed"] for c in summary.get("checks", [])):
        return EXIT_CHECK_FAILED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
