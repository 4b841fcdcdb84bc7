"""Sum rate after every outer BCD iteration for the FC and PC designs.

Writes one CSV row per (method, trial, stage, iteration) so convergence
curves can be averaged externally.

    python3 scripts/convergence_study.py --config configs/desk.toml --trials 20
"""
import argparse
import csv
import sys

from swan.harness import ScenarioConfig, load_config, run_trial
from swan.metrics import sum_rate


def trace_trial(cfg: ScenarioConfig, trial: int):
    rows, counters = [], {}
    radio = cfg.radio()

    def cb(variant, stage, state, x, H):
        # one point per outer iteration: after every digital update
        if stage != "digital":
            return
        it = counters.get(variant, 0)
        counters[variant] = it + 1
        rows.append((variant, it, sum_rate(state, H, radio)))

    result = run_trial(cfg, trial, cb)
    return result, rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config")
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--methods", default="swan_fc_wmmse,swan_pc_wmmse")
    ap.add_argument("--out", help="CSV path (default stdout)")
    args = ap.parse_args()
    base = load_config(args.config) if args.config else ScenarioConfig(M=16, N_RF=8, K=4)
    fh = open(args.out, "w", encoding="utf-8", newline="\n") if args.out else sys.stdout
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["method", "trial", "stage", "iteration", "sum_rate_bpshz"])
    for method in args.methods.split(","):
        cfg = base.replace(method=method)
        for t in range(args.trials):
            res, rows = trace_trial(cfg, t)
            if not res.ok:
                print(f"{method} trial {t}: {res.error}", file=sys.stderr)
            for variant, it, r in rows:
                w.writerow([method, t, variant, it, repr(float(r))])
    if fh is not sys.stdout:
        fh.close()


if __name__ == "__main__":
    main()
