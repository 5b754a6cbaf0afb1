"""Command-line interface.

Subcommands: zeta, exact-time, ndelta, simulate, ensemble, extremes,
scaling, compare.  Global flags (--seed, --out, --format, --config,
--threads) may also come from a flat key=value config file; explicit flags
win.  Exit codes: 0 success, 2 config error, 3 divergence signal,
4 precision or censoring failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from typing import Optional

import numpy as np

from . import ensemble as ens
from . import harness, moment_zeta, simulators
from .batch_exact import expected_time_series, n_delta as exact_n_delta
from .errors import (CensoringError, ConfigError, DivergenceError,
                     PrecisionLossError)
from .harness import RunConfig


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="batchlab",
        description="Batch-learning convergence laboratory")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="64-bit master seed")
    common.add_argument("--out", default=None, help="output path (default stdout)")
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("--config", default=None, help="flat key=value config file")
    common.add_argument("--threads", type=int, default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("zeta", parents=[common],
                       help="moment zeta function value with certified error")
    p.add_argument("--dist", default=None)
    p.add_argument("--s", type=float, default=None, required=False)
    p.add_argument("--eps", type=float, default=None)

    p = sub.add_parser("exact-time", parents=[common],
                       help="exact expected learning time for a fixed vector")
    p.add_argument("--p", default=None, help="comma-separated overlaps in [0,1)")
    p.add_argument("--eps", type=float, default=None)

    p = sub.add_parser("ndelta", parents=[common],
                       help="smallest k with survival <= delta")
    p.add_argument("--p", default=None)
    p.add_argument("--delta", type=float, default=None)

    p = sub.add_parser("simulate", parents=[common],
                       help="Monte Carlo trials of one learning algorithm")
    p.add_argument("--alg", dest="algorithm",
                   choices=simulators.ALGORITHMS, default=None)
    p.add_argument("--dist", default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--fixed-p", dest="p", default=None,
                   help="reuse this vector instead of resampling")
    p.add_argument("--horizon", type=int, default=None)
    p.add_argument("--dump", action="store_true", default=None,
                   help="emit per-trial times as CSV")

    p = sub.add_parser("ensemble", parents=[common],
                       help="expected time under the overlap law, one method")
    p.add_argument("--dist", default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--method", choices=ens.METHODS, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--eps", type=float, default=None)

    p = sub.add_parser("extremes", parents=[common],
                       help="minimum-gap extreme value statistics over an n sweep")
    p.add_argument("--dist", default=None)
    p.add_argument("--n-sweep", dest="n_sweep", default=None,
                   help="comma-separated n values")
    p.add_argument("--trials", type=int, default=None)

    p = sub.add_parser("scaling", parents=[common],
                       help="n-sweep with fitted log-log exponent")
    p.add_argument("--dist", default=None)
    p.add_argument("--n-sweep", dest="n_sweep", default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--method", default=None,
                   help="moment_series | mc_median | auto")
    p.add_argument("--eps", type=float, default=None)

    p = sub.add_parser("compare", parents=[common],
                       help="three-algorithm empirical N_delta table")
    p.add_argument("--dist", default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--n-sweep", dest="n_sweep", default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--horizon", type=int, default=None)
    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    base = RunConfig(command=args.command)
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                base = RunConfig.from_text(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read config file {args.config!r}: {exc}")
        base.command = args.command
    overrides = {}
    for key in ("dist", "n", "trials", "delta", "eps", "s", "seed", "threads",
                "method", "algorithm", "horizon", "out", "format", "dump"):
        if hasattr(args, key):
            overrides[key] = getattr(args, key)
    if getattr(args, "n_sweep", None) is not None:
        overrides["n_sweep"] = tuple(
            int(x) for x in str(args.n_sweep).split(",") if x)
    if getattr(args, "p", None) is not None:
        try:
            overrides["p"] = tuple(float(x) for x in str(args.p).split(",") if x)
        except ValueError:
            raise ConfigError(f"bad --p value {args.p!r}") from None
    return base.merged(overrides)


# ----------------------------------------------------------------------
# command handlers
# ----------------------------------------------------------------------


def _cmd_zeta(cfg: RunConfig) -> str:
    if cfg.s is None:
        raise ConfigError("zeta requires --s")
    z = moment_zeta.zeta(cfg.distribution(), cfg.s, eps=cfg.eps)
    return _json({"dist": cfg.dist, "s": z.s, "value": z.value,
                  "k_used": z.k_used, "error_bound": z.error_bound,
                  "eps": cfg.eps})


def _cmd_exact_time(cfg: RunConfig) -> str:
    if not cfg.p:
        raise ConfigError("exact-time requires --p")
    est = expected_time_series(np.asarray(cfg.p), eps=cfg.eps)
    return _json({"p": list(cfg.p), "eps": cfg.eps, "t": est.t,
                  "steps_expectation": est.steps_expectation})


def _cmd_ndelta(cfg: RunConfig) -> str:
    if not cfg.p:
        raise ConfigError("ndelta requires --p")
    value = exact_n_delta(np.asarray(cfg.p), cfg.delta)
    return _json({"p": list(cfg.p), "delta": cfg.delta, "n_delta": value})


def _cmd_simulate(cfg: RunConfig) -> str:
    if cfg.algorithm is None:
        raise ConfigError("simulate requires --alg")
    fixed = np.asarray(cfg.p) if cfg.p else None
    if fixed is None and cfg.n is None:
        raise ConfigError("simulate requires --n (or --fixed-p)")
    batch = simulators.run_trials(
        cfg.algorithm, cfg.distribution(), cfg.n or 0, cfg.trials, cfg.seed,
        fixed_p=fixed, horizon=cfg.horizon, threads=cfg.threads)
    if cfg.dump:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["trial", "time"])
        for i, t in enumerate(batch.times):
            w.writerow([i, int(t) if np.isfinite(t) else "inf"])
        return buf.getvalue()
    summary = batch.summary()
    summary["horizon"] = cfg.horizon
    return _json(summary)


def _cmd_ensemble(cfg: RunConfig) -> str:
    if cfg.n is None:
        raise ConfigError("ensemble requires --n")
    methods = [cfg.method] if cfg.method else ["moment_series"]
    rows = []
    for method in methods:
        t0 = time.perf_counter()
        est = ens.ensemble_estimate(cfg.distribution(), cfg.n, method,
                                    trials=cfg.trials, seed=cfg.seed,
                                    threads=cfg.threads, eps=cfg.eps)
        rows.append({"dist": cfg.dist, "n": est.n, "method": est.method,
                     "value": est.value, "error": est.error_bound,
                     "runtime_seconds": time.perf_counter() - t0})
    if (cfg.format or "csv") == "json":
        return _json({"rows": rows})
    return _rows_csv(rows, ["dist", "n", "method", "value", "error",
                            "runtime_seconds"])


def _cmd_extremes(cfg: RunConfig) -> str:
    if not cfg.n_sweep:
        raise ConfigError("extremes requires --n-sweep")
    t0 = time.perf_counter()
    rep = ens.extreme_value(cfg.distribution(), cfg.n_sweep, cfg.trials,
                            cfg.seed, threads=cfg.threads)
    elapsed = time.perf_counter() - t0
    rows = [{"dist": cfg.dist, "n": n, "method": "mc_min_gap",
             "value": rep.mean_min_q[i], "error": rep.stderr[i],
             "fitted_C": rep.fitted_C, "fitted_slope": rep.fitted_slope,
             "ks_distance": rep.ks_distance, "ks_n": rep.ks_n,
             "runtime_seconds": elapsed / len(cfg.n_sweep)}
            for i, n in enumerate(rep.n_values)]
    if (cfg.format or "csv") == "json":
        return _json({"rows": rows})
    return _rows_csv(rows, ["dist", "n", "method", "value", "error",
                            "fitted_C", "fitted_slope", "ks_distance",
                            "ks_n", "runtime_seconds"])


def _cmd_scaling(cfg: RunConfig) -> str:
    report = harness.run_scaling(cfg)
    return harness.emit(report, cfg.format or "json")


def _cmd_compare(cfg: RunConfig) -> str:
    report = harness.compare_algorithms(cfg)
    return harness.emit(report, cfg.format or "json")


_HANDLERS = {
    "zeta": _cmd_zeta,
    "exact-time": _cmd_exact_time,
    "ndelta": _cmd_ndelta,
    "simulate": _cmd_simulate,
    "ensemble": _cmd_ensemble,
    "extremes": _cmd_extremes,
    "scaling": _cmd_scaling,
    "compare": _cmd_compare,
}


def _json(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _rows_csv(rows: list, columns: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow(["" if row[c] is None else row[c] for c in columns])
    return buf.getvalue()


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config_from_args(args).validate()
        text = _HANDLERS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DivergenceError as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return 3
    except (PrecisionLossError, CensoringError) as exc:
        print(f"precision/censoring failure: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if cfg.out:
        try:
            with open(cfg.out, "w") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"cannot write {cfg.out!r}: {exc}", file=sys.stderr)
            return 2
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
