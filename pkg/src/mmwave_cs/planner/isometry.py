"""Monte Carlo checks of the isometry properties that size ``M`` and ``L``."""
from __future__ import annotations

import math

import numpy as np

from ..sounding import _rng, generate_weights, rx_worst_case_ratio, select_rx_weights


def grid_atoms(a: np.ndarray, n: int, oversampling: int) -> tuple[np.ndarray, np.ndarray]:
    """``A x(w)`` for every point of a ``T x T`` DFT grid, ``T = oversampling * n``.

    Returns the atoms ``(M, T**2)`` and the grid frequencies ``(T**2, 2)``.
    Column ``l * T + k`` holds ``w = (2 pi k / T, 2 pi l / T)``.
    """
    t = oversampling * n
    rows = np.asarray(a).reshape(-1, n, n)
    atoms = (np.fft.ifft2(rows, s=(t, t)) * (t * t)).reshape(rows.shape[0], t * t)
    k = 2.0 * np.pi * np.arange(t) / t
    kz, kx = np.meshgrid(k, k, indexing="ij")
    return atoms, np.stack([kx.ravel(), kz.ravel()], axis=1)


def _dirichlet(n: int, delta: np.ndarray) -> np.ndarray:
    """``sum_{m<n} exp(j delta m)`` evaluated elementwise."""
    m = np.arange(n)
    return np.exp(1j * delta[..., None] * m).sum(axis=-1)


def _distinct_supports(rng, size: int, trials: int, s: int) -> np.ndarray:
    sup = rng.integers(0, size, size=(trials, s))
    srt = np.sort(sup, axis=1)
    bad = np.any(srt[:, 1:] == srt[:, :-1], axis=1)
    while np.any(bad):
        sup[bad] = rng.integers(0, size, size=(int(bad.sum()), s))
        srt = np.sort(sup, axis=1)
        bad = np.any(srt[:, 1:] == srt[:, :-1], axis=1)
    return sup


def isometry_ratios(a: np.ndarray, n_t: int, sparsity: int, grid_oversampling: int = 8,
                    trials: int = 100_000, seed=None, chunk: int = 4000) -> np.ndarray:
    """``||A X u||**2 / (M ||X u||**2)`` for random ``sparsity``-sparse ``u``.

    Supports are uniform over the oversampled grid, coefficients i.i.d.
    circular complex Gaussian.  ``grid_oversampling`` is per axis, so 8 gives
    the ``64 * n_t**2`` grid.
    """
    rng = _rng(seed)
    a = np.asarray(a)
    m = a.shape[0]
    atoms, _ = grid_atoms(a, n_t, grid_oversampling)
    t = grid_oversampling * n_t
    table = _dirichlet(n_t, 2.0 * np.pi * np.arange(t) / t)  # D(2 pi k / T)
    if sparsity > atoms.shape[1]:
        raise ValueError("sparsity exceeds grid size")
    out = np.empty(trials)
    done = 0
    while done < trials:
        c = min(chunk, trials - done)
        sup = _distinct_supports(rng, atoms.shape[1], c, sparsity)
        u = (rng.standard_normal((c, sparsity)) + 1j * rng.standard_normal((c, sparsity))) / np.sqrt(2)
        ax = atoms[:, sup]  # (M, c, s)
        num = np.sum(np.abs(np.einsum("mcs,cs->cm", ax, u)) ** 2, axis=1)
        kx, kz = sup % t, sup // t
        dx = (kx[:, None, :] - kx[:, :, None]) % t
        dz = (kz[:, None, :] - kz[:, :, None]) % t
        gram = table[dx] * table[dz]
        den = np.einsum("ca,cab,cb->c", u.conj(), gram, u).real
        out[done:done + c] = num / (m * den)
        done += c
    return out


def isometry_check_tx(n_t: int, m: int, sparsity: int = 8, grid_oversampling: int = 8,
                      trials: int = 100_000, seed=None) -> tuple[float, float]:
    """Min and max isometry ratio for a fresh random QPSK ``A``."""
    rng = _rng(seed)
    a = generate_weights(m, n_t * n_t, rng)
    r = isometry_ratios(a, n_t, sparsity, grid_oversampling, trials, rng)
    return float(r.min()), float(r.max())


def rx_degradation_db(n_r: int, l: int, candidates: int = 1000, grid_oversampling: int = 4, seed=None,
                      visible_radius: float | None = math.pi) -> float:
    """Worst-case receive energy loss (dB, positive) of the best of ``candidates`` random ``B``."""
    b = select_rx_weights(n_r, l, candidates, grid_oversampling, seed, visible_radius=visible_radius)
    return -10.0 * np.log10(rx_worst_case_ratio(b, n_r, grid_oversampling, visible_radius))


def tx_sweep(n_t: int, ms, sparsity: int = 8, grid_oversampling: int = 8, trials: int = 100_000, seed=0):
    """``(M, min_db, max_db)`` rows, one random ``A`` per ``M``."""
    ss = np.random.SeedSequence(seed)
    rows = []
    for m, child in zip(ms, ss.spawn(len(ms))):
        lo, hi = isometry_check_tx(n_t, int(m), sparsity, grid_oversampling, trials, np.random.default_rng(child))
        rows.append((int(m), 10 * np.log10(lo), 10 * np.log10(hi)))
    return rows


def rx_sweep(n_r: int, ls, candidates: int = 1000, grid_oversampling: int = 4, seed=0,
             visible_radius: float | None = math.pi):
    """``(L, degradation_db)`` rows."""
    ss = np.random.SeedSequence(seed)
    return [(int(l), rx_degradation_db(n_r, int(l), candidates, grid_oversampling, np.random.default_rng(c),
                                       visible_radius))
            for l, c in zip(ls, ss.spawn(len(ls)))]
