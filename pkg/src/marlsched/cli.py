"""Command line entry point: run | compare | plot."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .experiment import ALL_SCHEDULERS, ExperimentConfig, compare, run_scheduler
from .plots import emit_all


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="marl-sched",
                                     description="Heterogeneous scheduling simulator and experiment runner")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=str, help="JSON config file (flat dotted keys)")
        p.add_argument("--scheduler", type=str, help="scheduler name: random|wrr|minmin|drl")
        p.add_argument("--episodes", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--nodes", type=int)
        p.add_argument("--tasks", type=int)
        p.add_argument("--out", type=str)
        p.add_argument("--trace", action="store_true")

    common(sub.add_parser("run", help="run episodes for one scheduler"))
    common(sub.add_parser("compare", help="run all schedulers and build the comparison report"))
    plot = sub.add_parser("plot", help="emit SVG plots from result CSVs")
    plot.add_argument("results_dir", nargs="?", default=None)
    common(plot)
    return parser


def config_from_args(args) -> ExperimentConfig:
    config = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    overrides = {}
    if args.episodes is not None:
        overrides["episodes"] = args.episodes
        overrides["final_window"] = min(config.final_window, args.episodes)
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.nodes is not None:
        overrides["n_nodes"] = args.nodes
    if args.tasks is not None:
        overrides["n_tasks"] = args.tasks
    if args.out is not None:
        overrides["output_dir"] = args.out
    if args.trace:
        overrides["trace"] = True
    if getattr(args, "scheduler", None):
        overrides["schedulers"] = (args.scheduler,)
    return replace(config, **overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if args.command == "run":
        name = args.scheduler or "drl"
        if name not in ALL_SCHEDULERS:
            print(f"error: unknown scheduler {name!r}; choose from {', '.join(ALL_SCHEDULERS)}",
                  file=sys.stderr)
            return 2
        results = run_scheduler(config, name)
        print(f"wrote {Path(config.output_dir) / (name + '.csv')} ({len(results)} episodes)")
        return 0

    if args.command == "compare":
        for name in config.schedulers:
            if name not in ALL_SCHEDULERS:
                print(f"error: unknown scheduler {name!r}", file=sys.stderr)
                return 2
        compare(config)
        out = Path(config.output_dir)
        print(f"wrote {out / 'comparison.csv'} and {out / 'report.txt'}")
        return 0

    if args.command == "plot":
        results_dir = args.results_dir or config.output_dir
        outcomes = emit_all(results_dir, config.schedulers, config.final_window)
        failed = False
        for fname, err in outcomes.items():
            if err is None:
                print(f"wrote {Path(results_dir) / fname}")
            else:
                failed = True
                print(f"error ({fname}): {err}", file=sys.stderr)
        return 1 if failed else 0

    return 2


if __name__ == "__main__":
    sys.exit(main())
