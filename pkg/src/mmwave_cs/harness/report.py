"""CSV and JSON summary output for scenario runs."""
from __future__ import annotations

import collections
import csv
import math
from dataclasses import asdict, fields
from typing import Iterable, TextIO

import numpy as np

from .metrics import quantiles
from .scenario import MetricsRecord, RunParameters

SCHEMA = "mmwave-cs-metrics/1"
COLUMNS = [f.name for f in fields(MetricsRecord)]


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        if math.isnan(v):
            return ""
        return repr(v)
    return str(v)


def write_csv(records: Iterable[MetricsRecord], fh: TextIO, runtime: bool = False) -> list[MetricsRecord]:
    """Write ``# schema`` line, header and one row per record; returns the records.

    The runtime column is only written when requested so that the default
    output is bit-identical across runs.
    """
    cols = COLUMNS if runtime else [c for c in COLUMNS if c != "runtime_ms"]
    fh.write(f"# schema: {SCHEMA}\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(cols)
    kept = []
    for r in records:
        d = asdict(r)
        w.writerow([_fmt(d[c]) for c in cols])
        kept.append(r)
    return kept


def loss_db(gains_db, n_t: int) -> np.ndarray:
    """Shortfall from the full ``20 log10 n_t`` array gain."""
    return 20.0 * math.log10(n_t) - np.asarray(gains_db, dtype=float)


def k_hat_histogram(records: Iterable[MetricsRecord]) -> dict:
    """Counts of ``K_hat`` over (round, user) pairs."""
    seen = {}
    for r in records:
        seen[(r.round, r.user)] = r.k_hat
    return dict(sorted(collections.Counter(seen.values()).items()))


def k_hat_modes(hist: dict) -> list[int]:
    """All values attaining the maximum count (more than one on a tie)."""
    if not hist:
        return []
    top = max(hist.values())
    return sorted(k for k, c in hist.items() if c == top)


def summarize(records: list[MetricsRecord], n_t: int, params: RunParameters | None = None,
              error_cut: float = 0.5) -> dict:
    """Per-run aggregates: error quantiles, ``K_hat`` histogram and beamforming-loss quantiles."""
    d = np.array([r.delta_omega for r in records], dtype=float)
    beams = [r for r in records if r.beam_target]
    hist = k_hat_histogram(records)
    out = {
        "schema": SCHEMA,
        "n_records": len(records),
        "delta_omega": {**quantiles(d, (0.5, 0.8, 0.9, 0.99)),
                        f"fraction_below_{error_cut}": float(np.mean(d < error_cut)) if d.size else None},
        "k_hat_histogram": {str(k): v for k, v in hist.items()},
        "k_hat_modes": k_hat_modes(hist),
        "loss_ideal_db": quantiles(loss_db([r.gain_ideal_db for r in beams], n_t), (0.5, 0.9)),
        "loss_four_phase_db": quantiles(loss_db([r.gain_four_phase_db for r in beams], n_t), (0.5, 0.9)),
    }
    if params is not None:
        out["parameters"] = {"w_s_hz": params.w_s, "f_b_hz": params.f_b, "n_rounds": params.n_rounds,
                             "element_power_w": params.pe_w, "noise_var_w": params.sigma2,
                             "threshold_snr_db": params.threshold_db}
    return out
