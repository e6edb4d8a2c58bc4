#!/usr/bin/env python3
"""Run the shipped benchmark suite and write a CSV report.

Usage: python3 scripts/run_suite.py [--dir benchmarks] [--csv results/suite.csv]
"""

import argparse
from pathlib import Path

from dtinv import pipeline as pl

ROOT = Path(__file__).resolve().parent.parent


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dir", default=str(ROOT / "benchmarks"))
    ap.add_argument("--csv", default=str(ROOT / "results" / "suite.csv"))
    ap.add_argument("--timeout", type=float, default=300.0)
    ap.add_argument("--memory-mb", type=int, default=8192)
    ap.add_argument("--jobs", type=int, default=pl.cpu_count())
    args = ap.parse_args()
    rows = pl.run_suite(args.dir, timeout=args.timeout, memory_mb=args.memory_mb, jobs=args.jobs)
    print(pl.suite_table(rows), end="")
    out = Path(args.csv)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(pl.suite_csv(rows))
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
