"""Regenerate every figure table with default settings.

    python scripts/run_all.py results/ --workers 4

Writes one CSV per experiment (three for the 3-D map) into the output
directory and prints the wall time of each run.
"""

import argparse
import time
from pathlib import Path

from dmsecure.cli import output_paths
from dmsecure.config import EXPERIMENTS, load_config
from dmsecure.experiments import run

RUNS = [(name, []) for name in EXPERIMENTS] + [("sinr-map", ["spwt.mode=3d"])]


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("outdir", type=Path)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args()
    args.outdir.mkdir(parents=True, exist_ok=True)
    for name, overrides in RUNS:
        cfg = load_config(None, name, overrides)
        if args.seed is not None:
            cfg.seed = args.seed
        stem = name if not overrides else f"{name}-3d"
        t0 = time.perf_counter()
        tables = run(cfg, workers=args.workers)
        for table, path in zip(tables, output_paths(args.outdir / f"{stem}.csv", tables)):
            table.write(path)
            print(f"wrote {path}")
        print(f"{stem}: {time.perf_counter() - t0:.1f} s")


if __name__ == "__main__":
    main()
