"""Per-path estimation error and beamforming-gain metrics."""
from __future__ import annotations

import math

import numpy as np

from ..geometry import ArrayConfig, steering_vector, wrap_angle
from ..sounding import QPSK


def _as_pairs(omegas) -> np.ndarray:
    return np.asarray(omegas, dtype=float).reshape(-1, 2)


def wrapped_distances(true_omegas, est_omegas) -> np.ndarray:
    """Euclidean distances ``(K, K_hat)`` with each component wrapped to ``[-pi, pi)``."""
    t = _as_pairs(true_omegas)
    e = _as_pairs(est_omegas)
    d = wrap_angle(t[:, None, :] - e[None, :, :])
    return np.sqrt(np.sum(d * d, axis=-1))


def error_metric(true_omegas, est_omegas, n_t: int) -> np.ndarray:
    """``min_n ||w_m - w_hat_n|| / (2 pi / n_t)`` for every true frequency ``w_m``.

    Differences are wrapped, since frequencies ``2 pi`` apart are the same
    steering vector.  An empty estimate set gives ``inf`` for every path.
    """
    t = _as_pairs(true_omegas)
    if len(t) == 0:
        raise ValueError("true frequency set must be non-empty")
    e = _as_pairs(est_omegas)
    if len(e) == 0:
        return np.full(len(t), np.inf)
    return wrapped_distances(t, e).min(axis=1) / (2.0 * math.pi / n_t)


def quantize_weights(w, tol: float = 1e-12) -> np.ndarray:
    """Nearest of ``{1, j, -1, -j}`` per entry, maximizing ``Re(conj(q) w)``.

    Ties (within ``tol``) go to the earlier phase in the order ``1, j, -1, -j``.
    """
    w = np.asarray(w, dtype=complex)
    score = np.real(np.conj(QPSK)[None, :] * w.reshape(-1, 1))  # (n, 4)
    best = score.max(axis=1, keepdims=True)
    idx = np.argmax(score >= best - tol, axis=1)
    return QPSK[idx].reshape(w.shape)


def beam_weights(omega_hat, tx: ArrayConfig, mode: str = "ideal") -> np.ndarray:
    """Unit-norm transmit weights steered at ``omega_hat``.

    ``ideal`` conjugate-matches the steering vector; ``four_phase`` keeps only
    the quantized phase of each element.
    """
    x = steering_vector(tx, omega_hat)
    if mode == "ideal":
        w = np.conj(x)
    elif mode == "four_phase":
        w = quantize_weights(np.conj(x))
    else:
        raise ValueError(f"unknown beamforming mode {mode!r}")
    return w / np.linalg.norm(w)


def beamforming_gain(omega_hat, true_omegas, tx: ArrayConfig, mode: str = "ideal") -> float:
    """Power gain (dB, relative to one omnidirectional element) toward the true path nearest ``omega_hat``.

    With unit-norm weights the gain is ``|w^T x_t(w_true)|**2``, which equals
    ``n_t**2`` (``20 log10 n_t`` dB) for a perfect ideal beam.
    """
    t = _as_pairs(true_omegas)
    target = t[int(np.argmin(wrapped_distances(t, [omega_hat])[:, 0]))]
    w = beam_weights(omega_hat, tx, mode)
    g = abs(w @ steering_vector(tx, target)) ** 2
    return 10.0 * math.log10(max(g, 1e-300))


def quantiles(values, qs=(0.1, 0.5, 0.9)) -> dict:
    v = np.asarray(values, dtype=float)
    v = v[np.isfinite(v)]
    if v.size == 0:
        return {f"p{int(round(100 * q))}": None for q in qs}
    return {f"p{int(round(100 * q))}": float(np.quantile(v, q)) for q in qs}
