#!/usr/bin/env python3
"""Reproduce the three scaling-exponent fits at desk scale.

Sweeps n over 10^2 .. 10^5 (half-decade steps) for the three canonical
overlap laws and writes one CSV per law plus a console summary.  Expected
exponents: 0.5 (tail exponent beta = 1, moment series), 1.0 (uniform,
Monte Carlo median), 2.0 (beta = -0.5, Monte Carlo median).

Usage: python scripts/run_scaling_sweeps.py [--out-dir results] [--trials 2000]
"""

import argparse
import pathlib

from batchlab.harness import RunConfig, emit, run_scaling

SWEEP = (100, 316, 1000, 3162, 10000, 31623, 100000)

CASES = [
    ("powertail:beta=1", "moment_series", 0.5),
    ("uniform", "mc_median", 1.0),
    ("powertail:beta=-0.5", "mc_median", 2.0),
]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out-dir", default="results")
    ap.add_argument("--trials", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=20260810)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    out_dir = pathlib.Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    for dist, method, expected in CASES:
        cfg = RunConfig(command="scaling", dist=dist, n_sweep=SWEEP,
                        trials=args.trials, seed=args.seed, method=method,
                        threads=args.threads)
        report = run_scaling(cfg)
        name = dist.replace(":", "_").replace("=", "")
        path = out_dir / f"scaling_{name}.csv"
        emit(report, "csv", str(path))
        lo, hi = report.exponent_ci
        print(f"{dist:24s} method={method:14s} exponent={report.fitted_exponent:+.4f} "
              f"ci=({lo:+.4f}, {hi:+.4f}) expected={expected:+.2f} -> {path}")


if __name__ == "__main__":
    main()
