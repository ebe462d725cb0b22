"""Command-line entry point: ``plan``, ``bounds``, ``isometry``, ``simulate`` and ``reuse``."""
from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from .. import planner
from .config import ConfigError, build_config, load_config
from .report import summarize, write_csv
from .scenario import run_parameters, run_scenario

FULL_SCALE_TX_TRIALS = 5_000_000
FULL_SCALE_RX_CANDIDATES = 10_000


def _int_list(text: str) -> list[int]:
    """``"24,30"`` or ``"10:40:2"`` (start:stop:step, inclusive)."""
    if ":" in text:
        parts = [int(x) for x in text.split(":")]
        start, stop = parts[0], parts[1]
        step = parts[2] if len(parts) > 2 else 1
        return list(range(start, stop + 1, step))
    return [int(x) for x in text.split(",") if x]


def _writer(out):
    return csv.writer(out, lineterminator="\n")


def cmd_plan(args, out) -> int:
    link = planner.LinkParams(eirp_dbm=args.eirp, n_t=args.n_t, n_r=args.n_r, noise_figure_db=args.noise_figure,
                              comm_margin_db=args.comm_margin, est_margin_db=args.est_margin, mu=args.mu)
    table = planner.plan(link, args.m, args.l, v_max=args.v_max, r_min=args.r_min, spacing=args.spacing)
    w = _writer(out)
    w.writerow(["parameter", "value"])
    for k, v in table.items():
        w.writerow([k, v])
    return 0


def cmd_bounds(args, out) -> int:
    snr_db = np.arange(args.snr_min, args.snr_max + 0.5 * args.step, args.step)
    w = _writer(out)
    w.writerow(["snr_db", "crb", "zzb"])
    for row in planner.bound_curves(args.n_1d, snr_db):
        w.writerow([f"{float(row[0]):.6g}", repr(float(row[1])), repr(float(row[2]))])
    if args.threshold:
        print(f"# threshold_snr_db,{planner.threshold_snr(args.n_1d):.2f}", file=sys.stderr)
    return 0


def cmd_isometry(args, out) -> int:
    w = _writer(out)
    if args.side == "tx":
        trials = FULL_SCALE_TX_TRIALS if args.full_scale else args.trials
        w.writerow(["m", "min_db", "max_db"])
        for m, lo, hi in planner.tx_sweep(args.n_1d, _int_list(args.m), args.sparsity, args.grid_oversampling,
                                          trials, args.seed):
            w.writerow([m, f"{lo:.4f}", f"{hi:.4f}"])
    else:
        cands = FULL_SCALE_RX_CANDIDATES if args.full_scale else args.candidates
        radius = None if args.full_square else np.pi
        w.writerow(["l", "degradation_db"])
        for l, deg in planner.rx_sweep(args.n_1d, _int_list(args.l), cands, args.grid_oversampling, args.seed,
                                       radius):
            w.writerow([l, f"{deg:.4f}"])
    return 0


def cmd_reuse(args, out) -> int:
    gate = args.gate if args.gate is not None else planner.noise_limited_gate_db(planner.threshold_snr(args.n_t))
    w = _writer(out)
    w.writerow(["spacing_m", "r_f", "sir_db", "gate_db", "noise_limited"])
    for s in args.spacing:
        for r_f in range(1, args.r_f_max + 1):
            sir = planner.reuse_sir(planner.ReuseQuery(s, r_f, args.m, args.l, args.mu))
            w.writerow([s, r_f, f"{sir:.4f}", f"{gate:.4f}", int(sir > gate)])
    return 0


def cmd_simulate(args, out) -> int:
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.feedback is not None:
        overrides["feedback"] = {"mode": args.feedback}
    if args.duration is not None:
        overrides["duration"] = args.duration
    try:
        cfg = load_config(args.config, overrides) if args.config else build_config(overrides)
    except (ConfigError, OSError) as exc:
        errors = getattr(exc, "errors", [("<file>", str(exc))])
        for field_name, msg in errors:
            print(f"config error: {field_name}: {msg}", file=sys.stderr)
        return 2
    params = run_parameters(cfg)
    runtime = args.runtime or cfg.output.runtime
    csv_path = args.csv or cfg.output.csv
    records = run_scenario(cfg, params)
    if csv_path and csv_path != "-":
        with open(csv_path, "w", newline="") as fh:
            records = write_csv(records, fh, runtime)
    elif csv_path == "-":
        records = write_csv(records, out, runtime)
    else:
        records = list(records)
    summary = summarize(records, cfg.n_t, params)
    summary["feedback"] = cfg.feedback.mode
    summary["seed"] = cfg.seed
    text = json.dumps(summary, indent=2, sort_keys=True)
    summary_path = args.summary or cfg.output.summary
    if summary_path:
        with open(summary_path, "w") as fh:
            fh.write(text + "\n")
    if csv_path != "-":
        out.write(text + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mmwave-cs", description="Compressive mm-wave channel estimation toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    pl = sub.add_parser("plan", help="protocol parameter table for one deployment")
    pl.add_argument("--n-t", type=int, default=8, help="transmit array side")
    pl.add_argument("--n-r", type=int, default=4, help="receive array side")
    pl.add_argument("--m", type=int, default=24, help="transmit beacons")
    pl.add_argument("--l", type=int, default=6, help="receive measurements per beacon")
    pl.add_argument("--eirp", type=float, default=40.0, help="EIRP, dBm")
    pl.add_argument("--noise-figure", type=float, default=6.0)
    pl.add_argument("--comm-margin", type=float, default=10.0)
    pl.add_argument("--est-margin", type=float, default=16.0)
    pl.add_argument("--mu", type=float, default=0.016, help="absorption, dB/m")
    pl.add_argument("--v-max", type=float, default=20.0, help="fastest user, m/s")
    pl.add_argument("--r-min", type=float, default=20.0, help="closest user range, m")
    pl.add_argument("--spacing", type=float, default=50.0, help="basestation spacing, m")
    pl.set_defaults(func=cmd_plan)

    bd = sub.add_parser("bounds", help="CRB and ZZB curves as CSV")
    bd.add_argument("--n-1d", type=int, default=8)
    bd.add_argument("--snr-min", type=float, default=-10.0)
    bd.add_argument("--snr-max", type=float, default=40.0)
    bd.add_argument("--step", type=float, default=1.0)
    bd.add_argument("--threshold", action="store_true", help="also report the threshold SNR on stderr")
    bd.set_defaults(func=cmd_bounds)

    iso = sub.add_parser("isometry", help="Monte Carlo isometry sweeps for M (tx) or L (rx)")
    iso.add_argument("side", choices=["tx", "rx"])
    iso.add_argument("--n-1d", type=int, default=None, help="array side (default 32 tx, 4 rx)")
    iso.add_argument("--m", default="10:50:4", help="M values for tx, e.g. 24,30 or 10:50:4")
    iso.add_argument("--l", default="2:10", help="L values for rx")
    iso.add_argument("--sparsity", type=int, default=8)
    iso.add_argument("--grid-oversampling", type=int, default=None, help="per axis (default 8 tx, 4 rx)")
    iso.add_argument("--trials", type=int, default=100_000)
    iso.add_argument("--candidates", type=int, default=1000)
    iso.add_argument("--full-square", action="store_true", help="rx: include frequencies outside the visible disk")
    iso.add_argument("--full-scale", action="store_true", help="5e6 trials (tx) or 1e4 candidates (rx)")
    iso.add_argument("--seed", type=int, default=0)
    iso.set_defaults(func=cmd_isometry)

    sim = sub.add_parser("simulate", help="run a scenario; CSV metrics plus JSON summary")
    sim.add_argument("--config", help="YAML scenario file (default: built-in desk scenario)")
    sim.add_argument("--seed", type=int, default=None, help="override config seed")
    sim.add_argument("--feedback", choices=["full", "svd"], default=None)
    sim.add_argument("--duration", type=float, default=None)
    sim.add_argument("--csv", help="metrics CSV path ('-' for stdout)")
    sim.add_argument("--summary", help="JSON summary path")
    sim.add_argument("--runtime", action="store_true", help="add the (non-deterministic) runtime column")
    sim.set_defaults(func=cmd_simulate)

    ru = sub.add_parser("reuse", help="beacon SIR against reuse factor")
    ru.add_argument("--m", type=int, default=24)
    ru.add_argument("--l", type=int, default=6)
    ru.add_argument("--n-t", type=int, default=8, help="sets the default gate through the threshold SNR")
    ru.add_argument("--spacing", type=float, nargs="+", default=[50.0, 200.0])
    ru.add_argument("--r-f-max", type=int, default=6)
    ru.add_argument("--gate", type=float, default=None, help="SIR gate in dB")
    ru.add_argument("--mu", type=float, default=0.016)
    ru.set_defaults(func=cmd_reuse)
    return p


def main(argv=None, out=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "side", None) is not None:
        if args.n_1d is None:
            args.n_1d = 32 if args.side == "tx" else 4
        if args.grid_oversampling is None:
            args.grid_oversampling = 8 if args.side == "tx" else 4
    return args.func(args, out or sys.stdout)


if __name__ == "__main__":
    sys.exit(main())
