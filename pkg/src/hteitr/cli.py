"""Command-line entry point: ``hteitr {run,membership,eval}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import harness
from .base_learners import LoessConfig
from .lemma_diagnostics import membership_report
from .meta_learners import XLearnerConfig, fit_standard, fit_xlearner
from .policy_eval import sign
from .scenario_gen import builtin_names, read_csv


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hteitr", description="Compare CATE estimators and the treatment rules they imply.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the Monte Carlo comparison from a config file")
    run.add_argument("--config", required=True, type=Path, help="flat key = value config file")
    run.add_argument("--scenario", action="append",
                     help=f"scenario name or file, repeatable; overrides 'scenarios' ({', '.join(builtin_names())})")
    run.add_argument("--reps", type=int, help="override 'replications'")
    run.add_argument("--seed", type=int, help="override 'base_seed'")
    run.add_argument("--out", help="override 'output_dir'")
    run.add_argument("--workers", type=int, help="override 'workers'")

    mem = sub.add_parser("membership", help="Monte Carlo family-membership report for two strategies")
    mem.add_argument("--scenario", default="scenario2")
    mem.add_argument("--method1", default="xlearner", help="standard, xlearner or oracle")
    mem.add_argument("--method2", default="standard", help="standard, xlearner or oracle")
    mem.add_argument("--m", type=int, default=800)
    mem.add_argument("--n", type=int, default=40)
    mem.add_argument("--reps", type=int, default=200)
    mem.add_argument("--seed", type=int, default=0)
    mem.add_argument("--grid-size", type=int, default=1001)
    mem.add_argument("--span", type=float, default=0.75)
    mem.add_argument("--out", type=Path, help="also write the report as CSV to this path")

    ev = sub.add_parser("eval", help="fit both estimators on an x,a,y CSV and print the estimates")
    ev.add_argument("--data", required=True, type=Path)
    ev.add_argument("--points", type=int, default=21, help="size of the uniform evaluation grid")
    ev.add_argument("--span", type=float, default=0.75)
    return p


def _cli_scenario(entry: str) -> str:
    # files named on the command line are relative to the working directory
    return entry if entry in builtin_names() else str(Path(entry).resolve())


def _cmd_run(args) -> int:
    overrides = {
        "scenarios": ",".join(_cli_scenario(s) for s in args.scenario) if args.scenario else None,
        "replications": args.reps,
        "base_seed": args.seed,
        "output_dir": args.out,
        "workers": args.workers,
    }
    cfg = harness.load_config(args.config, **overrides)
    result = harness.run_experiment(cfg)
    print(f"{len(result.records)} records, {len(result.failures)} failures")
    for path in result.files:
        print(f"  wrote {path}")
    return 0


def _cmd_membership(args) -> int:
    spec = harness.resolve_scenario(args.scenario)
    cfg = XLearnerConfig(loess=LoessConfig(args.span))
    report = membership_report(args.method1, args.method2, spec, args.m, args.n,
                               args.reps, args.seed, grid_size=args.grid_size, cfg=cfg)
    print(report.to_text())
    if args.out:
        report.to_csv(args.out)
        print(f"wrote {args.out}")
    return 0


def _cmd_eval(args) -> int:
    data = read_csv(args.data)
    cfg = XLearnerConfig(loess=LoessConfig(args.span))
    standard = fit_standard(data, cfg.loess)
    xlearner = fit_xlearner(data, cfg)
    grid = np.linspace(data.x.min(), data.x.max(), args.points)
    ts, tx = standard(grid), xlearner(grid)
    print(f"# {args.data}: m={data.m} control, n={data.n} treated; X-learner weight g={xlearner.g:.6g}")
    print(f"# fit seconds: standard {standard.fit_wall_time:.6f}, xlearner {xlearner.fit_wall_time:.6f}")
    print(f"{'x':>10} {'tau_standard':>14} {'rule':>5} {'tau_xlearner':>14} {'rule':>5}")
    for x, a, ra, b, rb in zip(grid, ts, sign(ts), tx, sign(tx)):
        print(f"{x:10.4f} {a:14.6f} {ra:+5d} {b:14.6f} {rb:+5d}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": _cmd_run, "membership": _cmd_membership, "eval": _cmd_eval}[args.command]
    try:
        return handler(args)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"hteitr {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
