"""Cramer-Rao and Ziv-Zakai bounds for 2D frequency estimation, and the threshold SNR.

Model: ``y_mn = exp(j(w1 m + w2 n + phi)) + z_mn`` on an ``N x N`` array with
``SNR = N**2 / sigma**2``.  Bounds are for one frequency component (rad**2).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate


@dataclass(frozen=True)
class BoundQuery:
    n_1d: int
    snr: float  # linear, total signal energy over per-sample noise variance

    def __post_init__(self):
        if self.n_1d < 2:
            raise ValueError("n_1d must be >= 2")
        if not self.snr > 0:
            raise ValueError("snr must be positive")


def q_function(x: float) -> float:
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def dirichlet_ratio(n: int, h: float) -> float:
    """``|sin(n h / 2) / (n sin(h / 2))|`` with its limit 1 at ``h = 0``."""
    s = math.sin(h / 2.0)
    if abs(s) < 1e-300:
        return 1.0
    return abs(math.sin(n * h / 2.0) / (n * s))


def crb_freq(q: BoundQuery) -> float:
    return 6.0 / (q.snr * (q.n_1d ** 2 - 1))


def zzb_freq(q: BoundQuery, rtol: float = 1e-10) -> float:
    """Ziv-Zakai bound with periodic distortion, uniform prior over ``[0, 2 pi)**3``.

    ``int_0^pi Q(sqrt(SNR (1 - D_n(h)))) h dh``, integrated adaptively with
    breakpoints at the zeros ``2 pi k / n`` of the Dirichlet kernel.
    """
    n, snr = q.n_1d, q.snr

    def integrand(h):
        return q_function(math.sqrt(snr * max(0.0, 1.0 - dirichlet_ratio(n, h)))) * h

    points = [2.0 * math.pi * k / n for k in range(1, (n + 1) // 2) if 2.0 * math.pi * k / n < math.pi]
    val, _ = integrate.quad(integrand, 0.0, math.pi, points=points or None, limit=max(200, 20 * n),
                            epsabs=0.0, epsrel=rtol)
    return val


def zzb_excess_db(n_1d: int, snr_db: float) -> float:
    """``10 log10(ZZB / CRB)`` at ``snr_db``."""
    q = BoundQuery(n_1d, 10.0 ** (snr_db / 10.0))
    return 10.0 * math.log10(zzb_freq(q) / crb_freq(q))


def threshold_snr(n_1d: int, gap_db: float = 0.1, start_db: float = 40.0, coarse_db: float = 0.5,
                  resolution_db: float = 0.01) -> float:
    """Smallest SNR (dB, on a ``resolution_db`` grid) above which the ZZB stays within ``gap_db`` of the CRB.

    Walks down from ``start_db`` in ``coarse_db`` steps until the gap opens,
    then bisects.  The walk starts high because at very low SNR the ZZB
    saturates at ``pi**2/4`` and falls below the (then meaningless) CRB.
    """
    if n_1d < 2:
        raise ValueError("n_1d must be >= 2")
    hi = start_db
    if zzb_excess_db(n_1d, hi) > gap_db:
        raise ValueError(f"ZZB has not converged to the CRB by {start_db} dB")
    lo = hi - coarse_db
    while zzb_excess_db(n_1d, lo) <= gap_db:
        hi, lo = lo, lo - coarse_db
        if lo < -60.0:
            raise ValueError("no threshold found")
    while hi - lo > resolution_db / 100.0:
        mid = 0.5 * (lo + hi)
        if zzb_excess_db(n_1d, mid) <= gap_db:
            hi = mid
        else:
            lo = mid
    steps = math.ceil(lo / resolution_db - 1e-9)
    g = steps * resolution_db
    while zzb_excess_db(n_1d, g) > gap_db:
        steps += 1
        g = steps * resolution_db
    return round(g, 10)


def bound_curves(n_1d: int, snr_db) -> np.ndarray:
    """Rows ``(snr_db, crb, zzb)`` for each SNR in ``snr_db``."""
    rows = []
    for s in np.atleast_1d(snr_db):
        q = BoundQuery(n_1d, 10.0 ** (float(s) / 10.0))
        rows.append((float(s), crb_freq(q), zzb_freq(q)))
    return np.array(rows)
