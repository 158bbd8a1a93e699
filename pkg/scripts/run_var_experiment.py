#!/usr/bin/env python3
"""Desk-scale benchmark run: fit truncation orders 1..4 on the VAR(2) series
and compare their sampled statistics side by side.

Simulates 4096 steps of the two-lag benchmark process, calibrates a model per
truncation order with 10 seeds each, evaluates every calibrated model on
length-4 samples, and prints the seed-averaged test NLL plus the metric table
with the best order flagged per statistic.

Usage: python scripts/run_var_experiment.py [--orders 1 2 3 4] [--seeds 10]
"""

import argparse
import json
import math
import time
from pathlib import Path

from sigspline.calibration import TrainConfig, multi_seed_fit, windows_from_series
from sigspline.evaluation import evaluate, format_table
from sigspline.synthetic import benchmark_var_spec, simulate_var2


def parse_args():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--orders", type=int, nargs="+", default=[1, 2, 3, 4])
    parser.add_argument("--seeds", type=int, default=10)
    parser.add_argument("--n-lags", type=int, default=4096)
    parser.add_argument("--bins", type=int, default=16)
    parser.add_argument("--window", type=int, default=2)
    parser.add_argument("--batch", type=int, default=512)
    parser.add_argument("--out", type=Path, default=Path("var_experiment.json"))
    return parser.parse_args()


def main():
    args = parse_args()
    series = simulate_var2(benchmark_var_spec(n_lags=args.n_lags, rng_seed=0))
    dataset = windows_from_series(series, args.window)
    print(f"simulated {series.shape[0]} steps; {len(dataset)} training windows")

    reports = {}
    summary = {}
    for level in args.orders:
        cfg = TrainConfig(
            level=level, bins=args.bins, window=args.window,
            optimizer="newton", reg_kind="l2", reg_lambda=1e-6,
            max_iters=40, patience=32, rng_seed=0,
        )
        t0 = time.perf_counter()
        result = multi_seed_fit(dataset, cfg, n_seeds=args.seeds)
        fit_time = time.perf_counter() - t0
        report = evaluate(
            result.best_model, series, horizon=4, batch=args.batch,
            seeds=args.seeds, base_seed=0,
        )
        reports[f"order {level}"] = report
        mean = result.summary["test_nll_mean"]
        err = result.summary["test_nll_std"] / math.sqrt(args.seeds)
        summary[level] = {
            "test_nll_mean": mean,
            "test_nll_stderr": err,
            "parameter_count": result.summary["parameter_count"],
            "fit_seconds": round(fit_time, 1),
        }
        print(
            f"order {level}: {result.summary['parameter_count']:>6} params, "
            f"test NLL {mean:.4f} ± {err:.4f}  [{fit_time:.0f}s]"
        )

    table = format_table(reports)
    print()
    print(table)
    args.out.write_text(json.dumps({
        "summary": {str(k): v for k, v in summary.items()},
        "metrics": {name: r.to_dict() for name, r in reports.items()},
    }, indent=1))
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
