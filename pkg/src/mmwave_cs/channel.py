"""Propagation gain, MIMO channel assembly and beamformed impulse responses."""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .geometry import ArrayConfig, Path, SPEED_OF_LIGHT, steering_matrix

__all__ = ["Path", "path_gain_db", "assemble_channel", "impulse_response", "beamformed_amplitudes"]


def path_gain_db(r: float, mu: float = 0.016, wavelength: float = 5e-3) -> float:
    """Omnidirectional power gain at range ``r``: ``-mu*r + 20 log10(lambda / (4 pi r))``.

    ``mu`` is the absorption in dB/m (0.016 for oxygen at 60 GHz).
    """
    if not r > 0:
        raise ValueError(f"range must be positive, got {r}")
    return -mu * r + 20.0 * math.log10(wavelength / (4.0 * math.pi * r))


def assemble_channel(paths: Sequence[Path], tx: ArrayConfig, rx: ArrayConfig) -> np.ndarray:
    """``H = sum_l g_l x_t(w_t,l) x_r(w_r,l)^T`` with shape ``(n_t**2, n_r**2)``.

    The receive steering vector is transposed, not conjugated.  An empty path
    list gives the zero matrix.
    """
    if not paths:
        return np.zeros((tx.n_elements, rx.n_elements), dtype=complex)
    g = np.array([p.gain for p in paths], dtype=complex)
    xt = steering_matrix(tx, [tuple(p.omega_t) for p in paths])
    xr = steering_matrix(rx, [tuple(p.omega_r) for p in paths])
    return (xt * g) @ xr.T


def beamformed_amplitudes(paths: Sequence[Path], tx_weights, rx_weights, tx: ArrayConfig, rx: ArrayConfig):
    """Per-path complex amplitude ``(w_t^T x_t)(w_r^T x_r) g``."""
    wt = np.asarray(tx_weights)
    wr = np.asarray(rx_weights)
    xt = steering_matrix(tx, [tuple(p.omega_t) for p in paths])
    xr = steering_matrix(rx, [tuple(p.omega_r) for p in paths])
    g = np.array([p.gain for p in paths], dtype=complex)
    return (wt @ xt) * (wr @ xr) * g


def impulse_response(paths: Sequence[Path], tx_weights, rx_weights, bandwidth: float,
                     tx: ArrayConfig | None = None, rx: ArrayConfig | None = None) -> np.ndarray:
    """Tap magnitudes of the beamformed channel sampled at ``1/bandwidth``.

    Each path lands in the nearest tap relative to the earliest arrival; paths
    sharing a tap add coherently.  Array sizes are inferred from the weight
    lengths when ``tx``/``rx`` are omitted.
    """
    if not bandwidth > 0:
        raise ValueError("bandwidth must be positive")
    if not paths:
        return np.zeros(0)
    wt = np.asarray(tx_weights)
    wr = np.asarray(rx_weights)
    tx = tx or ArrayConfig(math.isqrt(wt.size))
    rx = rx or ArrayConfig(math.isqrt(wr.size))
    if tx.n_elements != wt.size or rx.n_elements != wr.size:
        raise ValueError("weight lengths do not match array sizes")
    amps = beamformed_amplitudes(paths, wt, wr, tx, rx)
    delays = np.array([p.length for p in paths]) / SPEED_OF_LIGHT
    taps = np.rint((delays - delays.min()) * bandwidth).astype(int)
    out = np.zeros(taps.max() + 1, dtype=complex)
    np.add.at(out, taps, amps)
    return np.abs(out)
