"""Command-line entry point.

Subcommands: experiment, summary-plot, normcompare, dump-basis.  Exit
codes: 0 success, 2 configuration error, 3 runtime error.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .errors import ConfigError, SharedSubError
from .experiment import (ExperimentConfig, compare_normalization, mean_sum_rmse,
                         run_experiment, run_summary_plot)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _common_args(sub):
    sub.add_argument("config", help="experiment configuration (JSON)")
    sub.add_argument("--seed", type=int, default=None, help="override the config seed")
    sub.add_argument("--jobs", type=int, default=1, help="parallel repetitions")
    sub.add_argument("--reproducible", action="store_true", default=True,
                     help="fixed reduction and write order (default: on)")
    sub.add_argument("--output-dir", default=None, help="override the output directory")
    sub.add_argument("--no-figures", action="store_true", help="skip figure rendering")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sharedsub",
        description="Shared active subspaces for vector-valued functions",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("experiment", help="full RMSE experiment over repetitions")
    _common_args(sub)

    sub = subs.add_parser("summary-plot", help="sufficient summary plot data for one method")
    _common_args(sub)
    sub.add_argument("--method", required=True, help="method tag (ag/mch/lp/sspd/fg/see)")
    sub.add_argument("--rank", type=int, default=1, help="reconstruction rank to highlight")

    sub = subs.add_parser("normcompare", help="normalized vs original-output gradients")
    _common_args(sub)

    sub = subs.add_parser("dump-basis", help="write one method's shared basis as CSV")
    _common_args(sub)
    sub.add_argument("--method", required=True, help="method tag")
    return parser


def _load_config(args) -> ExperimentConfig:
    config = ExperimentConfig.from_json_file(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    if args.output_dir is not None:
        config = replace(config, output_dir=args.output_dir)
    if args.no_figures:
        config = replace(config, figures=False)
    return config


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _load_config(args)
        if args.command == "experiment":
            result = run_experiment(config, jobs=args.jobs, reproducible=args.reproducible)
            for (method, j), value in sorted(mean_sum_rmse(result.records).items()):
                print(f"{method:5s} j={j} mean sum RMSE = {value:.6g}")
            print(f"wrote {result.output_dir}")
        elif args.command == "summary-plot":
            path = run_summary_plot(config, args.method, rank=args.rank)
            print(f"wrote {path}")
        elif args.command == "normcompare":
            path, rows = compare_normalization(config)
            for row in rows:
                print(f"{row['method']:5s} j={row['j']} normalized={row['mean_sum_rmse_normalized']:.6g} "
                      f"original={row['mean_sum_rmse_original']:.6g}")
            print(f"wrote {path}")
        elif args.command == "dump-basis":
            sub = replace(config, methods=(args.method,), rmse=False, figures=False)
            result = run_experiment(sub, jobs=1)
            print(f"wrote {result.output_dir / f'basis_{args.method}.csv'}")
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SharedSubError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
