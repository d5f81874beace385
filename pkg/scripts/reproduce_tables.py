#!/usr/bin/env python3
"""Benchmark the four losses on every registered dataset that is present.

Writes one report per dataset plus ``summary.csv`` (test MSE grid) into
``--out`` and prints the per-dataset tables. Missing datasets are listed and
skipped.

    python scripts/reproduce_tables.py --out results --jobs 4
"""

import argparse
import sys
from pathlib import Path

from asrl import bench, data
from asrl.report import format_summary, format_table, write_report


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", type=Path, default=Path("results"))
    ap.add_argument("--data-dir", type=Path, default=None)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    setup = bench.BenchSetup(split=data.SplitSpec(0.2, args.seed))
    args.out.mkdir(parents=True, exist_ok=True)
    grid, missing = {}, []
    for name, spec in data.registry().items():
        paths = data.dataset_paths(spec, args.data_dir)
        if not all(p.is_file() for p in paths):
            missing.append(name)
            continue
        ds = data.load_csv(paths, spec)
        report = bench.run_bench(ds, name, setup, source=f"registry:{name}", jobs=args.jobs)
        write_report(report, args.out / f"{name}.txt")
        print(format_table(report))
        grid[name] = {k: ev.mse for k, ev in report.results.items()}
    (args.out / "summary.csv").write_text(format_summary(grid), encoding="utf-8")
    print(format_summary(grid))
    if missing:
        print(f"skipped (files absent): {', '.join(missing)}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
