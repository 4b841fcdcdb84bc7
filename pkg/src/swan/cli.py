"""Command-line entry point: ``swan run | sweep | scaling-laws``."""
from __future__ import annotations

import argparse
import csv
import os
import sys
from typing import Optional, Sequence

from .errors import ConfigError, SwanError
from .harness import (ScenarioConfig, config_from_mapping, emit_results,
                      format_results, load_config, run_scenario, run_sweep,
                      summary_row)
from .scaling import ScalingParams, scaling_table


def _config(args) -> ScenarioConfig:
    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = config_from_mapping({}, os.environ)
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if getattr(args, "trials", None) is not None:
        changes["trials"] = args.trials
    if getattr(args, "method", None) is not None:
        changes["method"] = args.method
    return cfg.replace(**changes) if changes else cfg


def _cmd_run(args) -> int:
    cfg = _config(args)
    run = run_scenario(cfg, n_jobs=args.jobs)
    if args.out:
        emit_results(run.results, args.out, args.format, [summary_row(run)])
    else:
        sys.stdout.write(format_results(run.results, args.format))
    s = run.summary
    print(f"{cfg.method}: {s['n_ok']} ok, {s['n_failed']} failed, "
          f"median sum rate {s['median_sum_rate']:.4f} bit/s/Hz", file=sys.stderr)
    return 0


def _parse_values(text: str):
    vals = [v.strip() for v in text.split(",") if v.strip()]
    if not vals:
        raise ConfigError("--values needs at least one entry")
    return vals


def _cmd_sweep(args) -> int:
    cfg = _config(args)
    key = args.key or cfg.sweep_key
    values = _parse_values(args.values) if args.values else cfg.sweep_values
    runs = run_sweep(cfg, key, values, n_jobs=args.jobs)
    results = [r for run in runs for r in run.results]
    rows = [summary_row(run, key) for run in runs]
    if args.out:
        emit_results(results, args.out, args.format, rows)
    else:
        sys.stdout.write(format_results(results, args.format))
    for row in rows:
        print(f"{key}={row['sweep_value']}: median sum rate "
              f"{row['median_sum_rate']:.4f} bit/s/Hz", file=sys.stderr)
    return 0


def _cmd_scaling(args) -> int:
    if args.m_max < 1 or args.m_max % 2 == 0:
        raise ConfigError("--m-max must be a positive odd integer")
    radio = _config(args).radio()
    p = ScalingParams.from_radio(radio, args.L, args.delta_yz)
    Ms, exact, approx, r_exact, r_approx = scaling_table(args.limit, p, args.m_max)
    fh = open(args.out, "w", encoding="utf-8", newline="\n") if args.out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["M", "snr_exact", "snr_approx", "rate_exact", "rate_approx"])
        for row in zip(Ms, exact, approx, r_exact, r_approx):
            w.writerow([int(row[0])] + [repr(float(v)) for v in row[1:]])
    finally:
        if fh is not sys.stdout:
            fh.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="swan", description=(
        "Tri-hybrid beamforming simulator for segmented-waveguide "
        "pinching-antenna receivers."))
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat TOML scenario file")
        p.add_argument("--seed", type=int)
        p.add_argument("--trials", type=int)
        p.add_argument("--method")
        p.add_argument("--out", help="trial file; aggregates go to <stem>_summary")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--jobs", type=int, default=1, help="parallel trial workers")

    run = sub.add_parser("run", help="Monte Carlo run of one scenario")
    common(run)
    run.set_defaults(func=_cmd_run)

    sw = sub.add_parser("sweep", help="repeat a scenario over values of one key")
    common(sw)
    sw.add_argument("--key")
    sw.add_argument("--values", help="comma-separated list")
    sw.set_defaults(func=_cmd_sweep)

    sc = sub.add_parser("scaling-laws", help="closed-form single-user rate vs M")
    sc.add_argument("--limit", choices=("fc", "pc"), required=True)
    sc.add_argument("--L", type=float, required=True, help="segment length in m")
    sc.add_argument("--delta-yz", type=float, required=True,
                    help="user distance from the waveguide axis in m")
    sc.add_argument("--m-max", type=int, required=True, help="largest odd M")
    sc.add_argument("--config", help="scenario file supplying power and noise")
    sc.add_argument("--out")
    sc.set_defaults(func=_cmd_scaling)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SwanError, ValueError) as exc:
        print(f"swan: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"swan: I/O error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
