"""Command line entry point.

    synthmarket <command> --config cfg.json [--seed N] [--workers K]
                [--out DIR] [--no-figures]

Commands: fit, generate, evaluate, backtest, regurgitate, biaslab.
Exit codes: 0 success, 2 usage or config problem, 1 runtime failure.
"""

from __future__ import annotations

import argparse
import os
import sys
import traceback

from . import __version__
from .pipeline import (
    ConfigError,
    load_config,
    run_backtest,
    run_biaslab,
    run_evaluate,
    run_fit,
    run_generate,
    run_regurgitate,
)

__all__ = ["main", "build_parser"]

_COMMANDS = {
    "fit": run_fit,
    "generate": run_generate,
    "evaluate": run_evaluate,
    "backtest": run_backtest,
    "regurgitate": run_regurgitate,
    "biaslab": run_biaslab,
}


def _default_workers() -> int:
    env = os.environ.get("SYNTHMARKET_WORKERS", "").strip()
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="synthmarket",
        description="Factor-space market scenario generator and evaluation lab.",
    )
    parser.add_argument("--version", action="version", version=f"synthmarket {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")
    help_lines = {
        "fit": "fit a generator bundle on a returns panel",
        "generate": "draw scenario panels from a fitted bundle",
        "evaluate": "compare scenarios against a reference panel",
        "backtest": "sharpe profiles of the mean-reversion strategy",
        "regurgitate": "refit on synthetic data and check band coverage",
        "biaslab": "bias bracket and coverage of synthetic-sample estimators",
    }
    for name, fn in _COMMANDS.items():
        p = sub.add_parser(name, help=help_lines[name])
        p.add_argument("--config", required=True, help="path to a JSON config")
        p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
        p.add_argument(
            "--workers",
            type=int,
            default=None,
            help="parallel workers (default $SYNTHMARKET_WORKERS or 1)",
        )
        p.add_argument("--out", default=None, help="output directory (default ./out_<command>)")
        p.add_argument(
            "--no-figures",
            action="store_true",
            help="skip PNG rendering; tables and reports are always written",
        )
        p.set_defaults(fn=fn)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help(sys.stderr)
        return 2
    workers = args.workers if args.workers is not None else _default_workers()
    if workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return 2
    out_dir = args.out or f"out_{args.command}"
    try:
        cfg = load_config(args.config)
        args.fn(cfg, seed=args.seed, workers=workers, out_dir=out_dir, figures=not args.no_figures)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        traceback.print_exc()
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    print(f"{args.command}: wrote {os.path.abspath(out_dir)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
