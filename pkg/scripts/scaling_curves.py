"""Write single-user rate-scaling curves (FC and PC limits) to CSV files.

    python3 scripts/scaling_curves.py --out-dir results/scaling
"""
import argparse
from pathlib import Path

from swan.harness import ScenarioConfig
from swan.scaling import ScalingParams, fc_peak_segments, pc_limit, rate, scaling_table


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out-dir", default="results/scaling")
    ap.add_argument("--delta-yz", type=float, default=3.0)
    ap.add_argument("--lengths", default="0.25,0.5,1.0")
    ap.add_argument("--m-max", type=int, default=2001)
    args = ap.parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    radio = ScenarioConfig().radio()
    for L in (float(v) for v in args.lengths.split(",")):
        p = ScalingParams.from_radio(radio, L, args.delta_yz)
        for limit in ("fc", "pc"):
            Ms, exact, approx, r_exact, r_approx = scaling_table(limit, p, args.m_max)
            path = out / f"{limit}_L{L:g}.csv"
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write("M,snr_exact,snr_approx,rate_exact,rate_approx\n")
                for row in zip(Ms, exact, approx, r_exact, r_approx):
                    fh.write(",".join([str(int(row[0]))] + [repr(float(v)) for v in row[1:]]) + "\n")
        print(f"L={L:g}: FC peak estimate M*={fc_peak_segments(p):.1f}, "
              f"PC limit rate {rate(pc_limit(p)):.3f} bit/s/Hz")


if __name__ == "__main__":
    main()
