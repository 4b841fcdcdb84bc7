"""Median sum rate and energy efficiency of every method over a sweep.

    python3 scripts/method_comparison.py --key P_dBm --values -10,0,10 --trials 100
    python3 scripts/method_comparison.py --key N_RF --values 4,8,16 --M 32
"""
import argparse
import sys

from swan.harness import (METHODS, ScenarioConfig, emit_results, load_config,
                          run_sweep, summary_row)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config")
    ap.add_argument("--key", default="P_dBm")
    ap.add_argument("--values", default="-10,0,10")
    ap.add_argument("--methods", default=",".join(METHODS))
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--M", type=int)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", help="trial CSV; aggregates go to <stem>_summary.csv")
    args = ap.parse_args()
    base = load_config(args.config) if args.config else ScenarioConfig(M=16, N_RF=8, K=4)
    base = base.replace(trials=args.trials, **({"M": args.M} if args.M else {}))
    values = args.values.split(",")
    results, rows = [], []
    for method in args.methods.split(","):
        cfg = base.replace(method=method)
        if method == "swan_pc_wmmse" and args.key != "N_RF" and cfg.M % cfg.N_RF:
            print(f"skipping {method}: N_RF does not divide M", file=sys.stderr)
            continue
        for run in run_sweep(cfg, args.key, values, n_jobs=args.jobs):
            results += run.results
            row = summary_row(run, args.key)
            rows.append(row)
            print(f"{method:15s} {args.key}={row['sweep_value']}: median rate "
                  f"{row['median_sum_rate']:.3f}, median EE {row['median_ee']:.3f} "
                  f"({row['n_failed']} failed)")
    if args.out:
        emit_results(results, args.out, "csv", rows)


if __name__ == "__main__":
    main()
