"""Command-line entry point: ``qubofoil <stage> [options]``."""
from __future__ import annotations

import argparse
import os
import sys
import warnings

from . import __version__
from .hwadapt import CapacityError, InfeasibleSplitError
from .pipeline import BACKENDS, STAGES, ArtifactError, ConfigError, load_config
from .solvers import SolverError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CAPACITY = 3
EXIT_SOLVER = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qubofoil",
        description="Compile surrogate design problems to QUBOs, solve them and report the designs.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--seed", type=int, help="random seed (overrides config and QUBOFOIL_SEED)")
    common.add_argument("--backend", choices=BACKENDS, help="solver backend")
    common.add_argument("--out", help="output directory (overrides config and QUBOFOIL_OUT)")
    common.add_argument("--workers", type=int,
                        help="threads for solver replicas (default: available CPUs)")
    sub = parser.add_subparsers(dest="stage", required=True, metavar="stage")
    helps = {
        "synth": "sample a synthetic oracle on a grid and write samples.csv",
        "fit": "fit response-surface models and write fit.json",
        "compile": "encode, quadratize and hardware-adapt the first objective",
        "solve": "solve the compiled problem and decode the design",
        "pareto": "solve all lift/drag weights in one block-diagonal problem",
        "report": "write report.json and plot data",
        "all": "run every stage in order",
    }
    for name in STAGES:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    workers = args.workers if args.workers is not None else os.cpu_count()
    overrides = {"seed": args.seed, "backend": args.backend, "out": args.out, "workers": workers}
    try:
        cfg = load_config(args.config, overrides)
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            path = STAGES[args.stage](cfg)
    except (ConfigError, ArtifactError) as exc:
        print(f"qubofoil: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CapacityError, InfeasibleSplitError) as exc:
        print(f"qubofoil: capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except SolverError as exc:
        print(f"qubofoil: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    print(f"{args.stage}: wrote {path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
