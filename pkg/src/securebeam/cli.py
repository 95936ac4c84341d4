"""Command-line entry point: run experiments, validate configs."""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .config import EXPERIMENTS, default_config, load_config
from .harness import run_experiment


def build_parser():
    p = argparse.ArgumentParser(
        prog="securebeam",
        description="Artificial-noise-aided secure beamforming experiments",
    )
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment and write CSVs")
    run.add_argument("--experiment", required=True, choices=EXPERIMENTS)
    run.add_argument("--config", help="flat key=value config file (defaults per figure otherwise)")
    run.add_argument("--seed", type=int, help="master seed (overrides the config)")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--paper-scale", action="store_true",
                     help="N=18, K=4, 50 trials (slow; default is smoke scale)")
    run.add_argument("--jobs", type=int, default=1, help="parallel trial workers")

    val = sub.add_parser("validate-config", help="parse and validate a config file")
    val.add_argument("path")

    sub.add_parser("version", help="print the package version")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "version":
        print(__version__)
        return 0
    if args.command == "validate-config":
        try:
            cfg = load_config(args.path)
        except (OSError, ValueError) as exc:
            print(f"invalid config: {exc}", file=sys.stderr)
            return 1
        print(f"ok: experiment={cfg.experiment} digest={cfg.digest()}")
        return 0
    # run
    if args.config:
        cfg = load_config(args.config)
        cfg.experiment = args.experiment
        if args.paper_scale:
            cfg.n_antennas = max(cfg.n_antennas, 18)
            cfg.n_users = max(cfg.n_users, 4)
    else:
        cfg = default_config(args.experiment, paper_scale=args.paper_scale)
    if args.seed is not None:
        cfg.seed = args.seed
    cfg.validate()
    outputs = run_experiment(cfg, args.out, jobs=args.jobs)
    for path in outputs:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
