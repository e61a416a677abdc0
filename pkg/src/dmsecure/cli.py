"""Command line entry point: one subcommand per experiment."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import EXPERIMENTS, ConfigError, load_config, validate
from .experiments import run

log = logging.getLogger("dmsecure")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dmsim", description=__doc__)
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", type=Path, help="TOML config file, or a CSV written by an earlier run")
        p.add_argument("--seed", type=int, help="unsigned 64-bit master seed")
        p.add_argument("--out", type=Path,
                       help="output CSV (for 3d sinr-map: file stem, one CSV per slice); default stdout")
        p.add_argument("--trials", type=int, help="Monte-Carlo trials")
        p.add_argument("--workers", type=int, default=1, help="worker processes (results do not depend on it)")
        p.add_argument("-v", "--verbose", action="store_true")
        p.add_argument("overrides", nargs="*", metavar="key=value",
                       help="config overrides, e.g. doa.snr_db=5 link.k_list=[1,20]")
    return parser


def output_paths(out: Path, tables) -> list[Path]:
    if len(tables) == 1:
        return [out]
    return [out.with_name(f"{out.stem}_{t.name}{out.suffix or '.csv'}") for t in tables]


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config, args.experiment, args.overrides)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.trials is not None:
            cfg.trials = args.trials
        validate(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    log.info("running %s with seed %d", cfg.experiment, cfg.seed)
    tables = run(cfg, workers=args.workers)
    if args.out is None:
        for t in tables:
            sys.stdout.write(t.to_text())
        return 0
    for table, path in zip(tables, output_paths(args.out, tables)):
        table.write(path)
        log.info("wrote %s", path)
    return 0
