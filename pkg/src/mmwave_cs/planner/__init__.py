"""Protocol design: bounds, measurement sizing, link budget, sounding overhead and reuse."""
from __future__ import annotations


from .bounds import BoundQuery, bound_curves, crb_freq, threshold_snr, zzb_excess_db, zzb_freq
from .isometry import isometry_check_tx, isometry_ratios, rx_degradation_db, rx_sweep, tx_sweep
from .link import (LinkParams, ProtocolParams, comm_snr, min_sounding_time, overhead, sounding_bandwidth,
                   sounding_rate, transmit_power)
from .reuse import (ReuseQuery, dilogarithm, noise_limited_gate_db, reuse_sir, smallest_reuse_factor,
                    system_bandwidth)


def plan(link: LinkParams, m: int, l: int, v_max: float = 20.0, r_min: float = 20.0, spacing: float = 50.0,
         threshold_db: float | None = None) -> dict:
    """Full protocol table for one deployment (array spacing assumed half a wavelength)."""
    th = threshold_snr(link.n_t) if threshold_db is None else threshold_db
    p_dbm, pe_dbm = transmit_power(link.eirp_dbm, link.n_t)
    t_min = min_sounding_time(link, link.n_t, th)
    w_s = sounding_bandwidth(m, l, t_min)
    f_b = sounding_rate(link.wavelength / 2.0, link.wavelength, v_max, r_min, link.n_t)
    gate = noise_limited_gate_db(th)
    r_f = smallest_reuse_factor(m, l, spacing, gate, link.mu)
    return {
        "n_t": link.n_t,
        "n_r": link.n_r,
        "total_power_dbm": p_dbm,
        "element_power_dbm": pe_dbm,
        "threshold_snr_db": th,
        "min_sounding_time_s": t_min,
        "m": m,
        "l": l,
        "w_s_hz": w_s,
        "f_b_hz": f_b,
        "overhead": overhead(ProtocolParams(m, l, w_s, f_b)) if f_b > 0 else 0.0,
        "spacing_m": spacing,
        "sir_gate_db": gate,
        "r_f": r_f,
        "sir_db": reuse_sir(ReuseQuery(spacing, r_f, m, l, link.mu)),
        "system_bandwidth_hz": system_bandwidth(w_s, r_f),
    }


__all__ = [
    "BoundQuery", "LinkParams", "ProtocolParams", "ReuseQuery", "bound_curves", "comm_snr", "crb_freq",
    "dilogarithm", "isometry_check_tx", "isometry_ratios", "min_sounding_time", "noise_limited_gate_db",
    "overhead", "plan", "reuse_sir", "rx_degradation_db", "rx_sweep", "smallest_reuse_factor",
    "sounding_bandwidth", "sounding_rate", "system_bandwidth", "threshold_snr", "transmit_power",
    "tx_sweep", "zzb_excess_db", "zzb_freq",
]
