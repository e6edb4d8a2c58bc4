#!/usr/bin/env python3
"""Measure decision-tree learning time as the sample grows (m = 16 features).

Prints n, best-of-k wall time and the ratio to the previous n. With a fixed
labeling rule the tree stays small, so time should grow close to n log n.
"""

import argparse
import time

import numpy as np

from dtinv import dtlearn


def sample(n: int, m: int, seed: int):
    rng = np.random.default_rng(seed)
    Z = rng.integers(-100, 101, size=(n, m))
    y = (((Z[:, 3] <= 10) & (Z[:, 7] > -20)) | (Z[:, 1] > 50)).astype(np.int64)
    return Z, y


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="12500,25000,50000,100000,200000")
    ap.add_argument("--features", type=int, default=16)
    ap.add_argument("--reps", type=int, default=3)
    ap.add_argument("--criterion", choices=dtlearn.CRITERIA, default="gini")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]
    Z, y = sample(max(sizes), args.features, args.seed)
    prev = None
    print(f"{'n':>8}  {'time_s':>8}  {'ratio':>6}  nodes")
    for n in sizes:
        best, tree = float("inf"), None
        for _ in range(args.reps):
            t = time.perf_counter()
            tree = dtlearn.learn(Z[:n], y[:n], args.criterion, max_nodes=10 ** 6)
            best = min(best, time.perf_counter() - t)
        ratio = f"{best / prev:6.2f}" if prev else "     -"
        print(f"{n:>8}  {best:8.3f}  {ratio}  {tree.size}")
        prev = best


if __name__ == "__main__":
    main()
