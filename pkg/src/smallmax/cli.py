"""Command-line entry point.

Subcommands (each takes a TOML config, see README for the schema):

    smallmax run            <config>   solver runs over the sweep grid
    smallmax certify        <config>   lower-bound certificates (hard instances)
    smallmax check-diameter <config>   admissible-diameter verdicts
    smallmax krylov-bench   <config>   Krylov maximizer vs the dense oracle

Exit codes: 0 success, 1 assertion failure, 2 config error, 3 budget or
numerical error.
"""

from __future__ import annotations

import argparse
import sys

from .config import ConfigError, load
from .experiment import run_experiment
from .krylov import KrylovNumericalError
from .moreau import ProxNonConvergedError
from .solvers import BudgetExceededError


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="smallmax",
        description="min-max stationarity experiments with Taylor surrogates")
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd, help_ in (("run", "execute solver runs over the sweep grid"),
                       ("certify", "evaluate lower-bound certificates"),
                       ("check-diameter", "evaluate admissible-diameter verdicts"),
                       ("krylov-bench", "benchmark the Krylov ball maximizer")):
        sp = sub.add_parser(cmd, help=help_)
        sp.add_argument("config", help="TOML experiment config")
        sp.add_argument("--seed", type=int, default=None,
                        help="override [experiment].seed")
        sp.add_argument("--out-dir", default=None,
                        help="output directory (default: config, then "
                             "$SMALLMAX_OUT_DIR, then ./smallmax-out)")
        sp.add_argument("--jobs", type=int, default=1,
                        help="concurrent grid points (default 1)")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg, cfg_hash = load(args.config)
        mode = cfg["experiment"].get("mode", args.command)
        if mode != args.command:
            raise ConfigError(
                f"config declares mode '{mode}' but subcommand is '{args.command}'")
        if args.seed is not None:
            cfg["experiment"]["seed"] = args.seed
        return run_experiment(cfg, cfg_hash, args.command,
                              out_dir=args.out_dir, jobs=args.jobs)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (BudgetExceededError, ProxNonConvergedError, KrylovNumericalError) as exc:
        print(f"budget/numerical error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
