"""Compressive QPSK sounding: weight generation, the measured virtual channel and feedback.

Weight matrices are plain complex ndarrays whose entries lie in ``{+1, -1, +j, -j}``;
rows are virtual antennas and columns physical elements.  ``A`` (``M x n_t**2``)
lives at the basestation and ``B`` (``L x n_r**2``) at the mobile.  Neither side
learns the other's weights: the estimator only ever sees ``Y`` (or ``D``) and ``A``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

QPSK = np.array([1.0, 1.0j, -1.0, -1.0j])


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def generate_weights(rows: int, cols: int, seed=None) -> np.ndarray:
    """I.i.d. uniform draws from ``{1, j, -1, -j}``, deterministic given ``seed``."""
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be >= 1")
    return QPSK[_rng(seed).integers(0, 4, size=(rows, cols))]


def virtual_response(h: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Noiseless virtual channel ``V = A H B^T`` (transpose, no conjugation)."""
    h = np.asarray(h)
    if a.shape[1] != h.shape[0] or b.shape[1] != h.shape[1]:
        raise ValueError(f"shape mismatch: A{a.shape} H{h.shape} B{b.shape}")
    return a @ h @ b.T


@dataclass(frozen=True)
class VirtualChannel:
    y: np.ndarray
    per_element_power: float
    noise_var: float
    v: np.ndarray | None = None


def noise_variance(n_r: int, n0: float, w_s: float, interference: float = 0.0) -> float:
    """Per-measurement noise ``sigma^2 = n_r**2 (N0 W_s + I)``.

    The mobile sums ``n_r**2`` element outputs, each carrying independent thermal
    noise plus interference power ``I`` (watts per element).
    """
    if interference < 0:
        raise ValueError("interference power must be non-negative")
    return n_r * n_r * (n0 * w_s + interference)


def measure(h, a, b, pe: float, sigma2: float, seed=None) -> VirtualChannel:
    """``Y = sqrt(P_e) V + Z`` with ``Z`` i.i.d. circular complex Gaussian of variance ``sigma2``."""
    if pe < 0 or sigma2 < 0:
        raise ValueError("pe and sigma2 must be non-negative")
    v = virtual_response(h, a, b)
    y = math.sqrt(pe) * v
    if sigma2 > 0:
        rng = _rng(seed)
        z = rng.standard_normal(v.shape) + 1j * rng.standard_normal(v.shape)
        y = y + math.sqrt(sigma2 / 2.0) * z
    return VirtualChannel(y=y, per_element_power=pe, noise_var=sigma2, v=v)


@dataclass(frozen=True)
class FeedbackPayload:
    mode: str
    data: np.ndarray
    rank: int | None = None


def make_feedback(v, mode: str = "full", rank: int = 2) -> FeedbackPayload:
    """Uplink payload: all of ``Y`` (``"full"``) or ``D = [s_1 u_1 ... s_Q u_Q]`` (``"svd"``).

    ``D`` keeps the ``Q``-dimensional subspace of the column space of ``Y``
    carrying the most energy, so ``||D||_F**2`` is the sum of the top ``Q``
    squared singular values.
    """
    y = v.y if isinstance(v, VirtualChannel) else np.asarray(v)
    if mode == "full":
        return FeedbackPayload("full", y)
    if mode != "svd":
        raise ValueError(f"unknown feedback mode {mode!r}")
    if not 1 <= rank <= y.shape[1]:
        raise ValueError(f"svd rank {rank} must be between 1 and L={y.shape[1]}")
    u, s, _ = np.linalg.svd(y, full_matrices=False)
    return FeedbackPayload("svd", u[:, :rank] * s[:rank], rank)


def rx_grid_mask(n_r: int, grid_oversampling: int = 4, visible_radius: float | None = math.pi) -> np.ndarray:
    """Boolean ``(T, T)`` mask of grid points with ``w_x**2 + w_z**2 <= visible_radius**2``.

    Frequencies are wrapped to ``[-pi, pi)`` first.  For half-wavelength spacing
    every physical direction maps inside the disk of radius ``pi``; points in
    the corners of the square correspond to no direction at all.  ``None``
    keeps the whole square.
    """
    t = grid_oversampling * n_r
    if visible_radius is None:
        return np.ones((t, t), dtype=bool)
    k = 2.0 * np.pi * np.fft.fftfreq(t)
    return (k[:, None] ** 2 + k[None, :] ** 2) <= visible_radius ** 2 + 1e-12


def rx_gain_grid(b: np.ndarray, n_r: int, grid_oversampling: int = 4) -> np.ndarray:
    """``||B x_r(w)||**2 / (L n_r**2)`` over a ``T x T`` grid, ``T = oversampling * n_r``.

    Accepts a single ``(L, n_r**2)`` matrix or a stack ``(C, L, n_r**2)``.
    Entry ``[..., i, k]`` is the frequency ``(-2 pi k / T, -2 pi i / T)``; the mask
    from :func:`rx_grid_mask` is symmetric, so the sign flip is harmless.
    """
    b = np.asarray(b)
    t = grid_oversampling * n_r
    lead = b.shape[:-1]
    rows = b.reshape(*lead, n_r, n_r)  # [..., n, m]
    resp = np.fft.fft2(rows, s=(t, t))
    l = b.shape[-2]
    return (np.abs(resp) ** 2).sum(axis=-3) / (l * n_r * n_r)


def rx_worst_case_ratio(b: np.ndarray, n_r: int, grid_oversampling: int = 4,
                        visible_radius: float | None = math.pi) -> float:
    """``min_w ||B x_r(w)||**2 / (L n_r**2)`` over the grid points inside the visible region."""
    mask = rx_grid_mask(n_r, grid_oversampling, visible_radius)
    return float(rx_gain_grid(b, n_r, grid_oversampling)[mask].min())


def select_rx_weights(n_r: int, l: int, candidates: int = 1000, grid_oversampling: int = 4,
                      seed=None, chunk: int = 500, visible_radius: float | None = math.pi) -> np.ndarray:
    """Best of ``candidates`` random ``B`` by worst-case receive energy over the grid.

    The figure of merit is :func:`rx_worst_case_ratio`; the returned matrix
    maximizes it among the draws.
    """
    if l < 1 or candidates < 1:
        raise ValueError("l and candidates must be >= 1")
    rng = _rng(seed)
    mask = rx_grid_mask(n_r, grid_oversampling, visible_radius)
    best, best_score = None, -np.inf
    left = candidates
    while left > 0:
        c = min(chunk, left)
        left -= c
        stack = QPSK[rng.integers(0, 4, size=(c, l, n_r * n_r))]
        scores = rx_gain_grid(stack, n_r, grid_oversampling)[:, mask].min(axis=1)
        i = int(np.argmax(scores))
        if scores[i] > best_score:
            best, best_score = stack[i], scores[i]
    return best
