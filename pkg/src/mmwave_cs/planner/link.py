"""Link budget and sounding-protocol arithmetic (all in dB unless noted)."""
from __future__ import annotations

import math
from dataclasses import dataclass

from ..channel import path_gain_db

THERMAL_NOISE_DBM_HZ = -174.0


@dataclass(frozen=True)
class LinkParams:
    """Deployment inputs for the link budget.

    ``design_snr_db`` is the per-symbol communication SNR the cell is designed
    for; sounding time is derived relative to it so that range drops out.
    """

    eirp_dbm: float = 40.0
    n_t: int = 8
    n_r: int = 4
    noise_figure_db: float = 6.0
    comm_bandwidth: float = 2e9
    comm_margin_db: float = 10.0
    est_margin_db: float = 16.0
    mu: float = 0.016
    wavelength: float = 5e-3
    design_snr_db: float = 7.0

    def __post_init__(self):
        if self.comm_bandwidth <= 0:
            raise ValueError("comm_bandwidth must be positive")
        if self.comm_margin_db < 0 or self.est_margin_db < 0:
            raise ValueError("margins must be non-negative")

    @property
    def noise_density_dbm_hz(self) -> float:
        return THERMAL_NOISE_DBM_HZ + self.noise_figure_db

    @property
    def noise_density_w_hz(self) -> float:
        return 10.0 ** ((self.noise_density_dbm_hz - 30.0) / 10.0)


@dataclass(frozen=True)
class ProtocolParams:
    m: int
    l: int
    w_s: float
    f_b: float

    def __post_init__(self):
        if self.m < 1 or self.l < 1:
            raise ValueError("m and l must be >= 1")
        if self.w_s <= 0 or self.f_b <= 0:
            raise ValueError("w_s and f_b must be positive")
        if not 0 < overhead(self) < 1:
            raise ValueError("sounding overhead must lie in (0, 1)")


def transmit_power(eirp_dbm: float, n_t: int) -> tuple[float, float]:
    """Total power ``P = EIRP - 20 log10 n_t`` and per-element ``P_e = P - 20 log10 n_t`` (dBm)."""
    if n_t < 1:
        raise ValueError("n_t must be >= 1")
    gain = 20.0 * math.log10(n_t)
    return eirp_dbm - gain, eirp_dbm - 2.0 * gain


def comm_snr(link: LinkParams, r: float) -> float:
    """Per-symbol SNR of the beamformed data link at range ``r``."""
    return (link.eirp_dbm + path_gain_db(r, link.mu, link.wavelength) + 20.0 * math.log10(link.n_r)
            - (link.noise_density_dbm_hz + 10.0 * math.log10(link.comm_bandwidth)) - link.comm_margin_db)


def min_sounding_time(link: LinkParams, n_t: int, threshold_db: float, est_margin_db: float | None = None) -> float:
    """Minimum ``M L / W_s`` (seconds) for the sounding SNR to clear ``threshold_db``.

    Combines the estimation requirement with the communication link budget at
    ``link.design_snr_db``, so the path gain (and hence range) cancels::

        10 log10(ML/W_s) >= SNR_th - SNR_c + L_est - L_comm
                            + 20 log10 n_t + 20 log10 n_r - 10 log10 W_c
    """
    est = link.est_margin_db if est_margin_db is None else est_margin_db
    db = (threshold_db - link.design_snr_db + est - link.comm_margin_db
          + 20.0 * math.log10(n_t) + 20.0 * math.log10(link.n_r) - 10.0 * math.log10(link.comm_bandwidth))
    return 10.0 ** (db / 10.0)


def sounding_bandwidth(m: int, l: int, min_time: float) -> float:
    return m * l / min_time


def sounding_rate(d: float, wavelength: float, v_max: float, r_min: float, n_t: int) -> float:
    """``f_B >= 2 d v_max n_t / (r_min lambda)`` keeps per-round drift under half a DFT bin."""
    if r_min <= 0 or wavelength <= 0:
        raise ValueError("r_min and wavelength must be positive")
    return 2.0 * d * v_max * n_t / (r_min * wavelength)


def overhead(params: ProtocolParams) -> float:
    """Fraction of airtime spent sounding, ``M L f_B / W_s``."""
    return params.m * params.l * params.f_b / params.w_s
