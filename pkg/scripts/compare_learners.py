#!/usr/bin/env python3
"""Empirical N_delta comparison of the three learners across n.

Batch should never lose to the memoryless learner for tail exponents
beta >= 0, and is the only sublinear algorithm for beta > 0; against full
memory the outcome depends on the law.  Writes a CSV table and prints any
ordering violations.

Usage: python scripts/compare_learners.py [--dist uniform] [--delta 0.1]
"""

import argparse

from batchlab.harness import RunConfig, compare_algorithms, emit


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--dist", default="uniform")
    ap.add_argument("--delta", type=float, default=0.1)
    ap.add_argument("--trials", type=int, default=10000)
    ap.add_argument("--n-sweep", default="30,100,300,1000")
    ap.add_argument("--seed", type=int, default=20260810)
    ap.add_argument("--out", default="comparison.csv")
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    cfg = RunConfig(command="compare", dist=args.dist, delta=args.delta,
                    trials=args.trials, seed=args.seed, threads=args.threads,
                    n_sweep=tuple(int(x) for x in args.n_sweep.split(",")))
    table = compare_algorithms(cfg)
    emit(table, "csv", args.out)

    header = f"{'n':>8s}" + "".join(f"{alg:>14s}" for alg in table.algorithms)
    print(header)
    for i, n in enumerate(table.n_values):
        row = f"{n:>8d}" + "".join(f"{table.n_delta[alg][i]:>14d}"
                                   for alg in table.algorithms)
        print(row)
    if table.violations:
        print("ordering violations:")
        for v in table.violations:
            print(" ", v)
    else:
        print("no ordering violations (batch <= memoryless everywhere)")
    print(f"-> {args.out}")


if __name__ == "__main__":
    main()
