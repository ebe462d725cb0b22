"""Sequential estimation of transmit spatial frequencies from compressive measurements.

The measurements are the columns of an ``M x L`` matrix ``Y`` (or the ``M x Q``
SVD feedback ``D``; both are treated as generic snapshots)::

    y_k = sum_l h_lk A x_t(w_l) + z_k

Per path the estimator runs a coarse FFT grid search (detection) followed by
Newton refinement of the frequency alternating with least-squares gain updates.
Paths are added one at a time, all paths are refined round-robin after every
addition, and the loop stops once a new path reduces the residual energy by
less than ``tau``.  Tracking warm-starts from the previous round's frequencies
and prunes paths that no longer pay for themselves.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import optimize

from .geometry import SpatialFrequency, steering_matrix, wrap_angle


@dataclass(frozen=True)
class EstimatorConfig:
    grid_oversampling: int = 4
    newton_iters: int = 5
    refine_rounds: int = 3
    tau_coefficient: float = 30.0
    tau_log: str = "ln"  # "ln" or "log10"
    max_paths: int = 8
    joint_polish: bool = True  # variable-projection Levenberg-Marquardt over all frequencies after round-robin
    polish_max_evals: int = 100
    merge_fraction: float = 0.25  # duplicate guard, in DFT bins (l-inf)
    hessian: str = "profile"  # "profile" (gains eliminated) or "fixed_gain"

    def __post_init__(self):
        for name in ("grid_oversampling", "newton_iters", "refine_rounds", "max_paths"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.polish_max_evals < 1:
            raise ValueError("polish_max_evals must be >= 1")
        if self.tau_log not in ("ln", "log10"):
            raise ValueError("tau_log must be 'ln' or 'log10'")
        if self.hessian not in ("profile", "fixed_gain"):
            raise ValueError("hessian must be 'profile' or 'fixed_gain'")

    def tau(self, sigma2: float, n_t: int) -> float:
        """Stopping threshold ``c * sigma^2 * log(20 n_t)``."""
        log = math.log if self.tau_log == "ln" else math.log10
        return self.tau_coefficient * sigma2 * log(20 * n_t)


@dataclass(frozen=True)
class PathEstimate:
    omega: SpatialFrequency
    gains: np.ndarray

    @property
    def energy(self) -> float:
        """``sum_k |h_k|**2``."""
        return float(np.sum(np.abs(self.gains) ** 2))


@dataclass
class EstimateSet:
    paths: list = field(default_factory=list)
    capped: bool = False
    trace: list = field(default_factory=list)

    def __len__(self):
        return len(self.paths)

    def __iter__(self):
        return iter(self.paths)

    def omegas(self) -> np.ndarray:
        return np.array([tuple(p.omega) for p in self.paths], dtype=float).reshape(-1, 2)

    def strongest(self) -> PathEstimate | None:
        return max(self.paths, key=lambda p: p.energy) if self.paths else None


def path_power(est: PathEstimate, pe: float, n_r: int, l: int) -> float:
    """``|g|**2`` from ``P_e |g|**2 = sum_k |h_k|**2 / (L n_r**2)``.

    ``l`` is the number of receive measurements actually made, which for SVD
    feedback differs from the number of columns fed back.
    """
    return est.energy / (l * n_r * n_r * pe)


# --------------------------------------------------------------------------- dictionary


class SensingDictionary:
    """Atoms ``A x_t(w)`` and their frequency derivatives for a fixed ``A``."""

    def __init__(self, a: np.ndarray, grid_oversampling: int = 4):
        a = np.asarray(a)
        n = math.isqrt(a.shape[1])
        if n * n != a.shape[1]:
            raise ValueError("A must have n_t**2 columns")
        self.a = a
        self.n = n
        self.grid_size = grid_oversampling * n
        idx = np.arange(n * n)
        self._m = (idx % n).astype(float)
        self._n = (idx // n).astype(float)
        self._grid = None

    def atoms(self, omegas) -> np.ndarray:
        return self.a @ steering_matrix(self.n, omegas)

    def atom(self, omega) -> np.ndarray:
        return self.atoms(omega)[:, 0]

    def derivatives(self, omega):
        """``x``, first derivatives ``(M, 2)`` and second derivatives ``(M, 2, 2)``."""
        xt = steering_matrix(self.n, omega)[:, 0]
        m, n = self._m, self._n
        d1 = self.a @ np.stack([1j * m * xt, 1j * n * xt], axis=1)
        d2 = self.a @ np.stack([-m * m * xt, -m * n * xt, -m * n * xt, -n * n * xt], axis=1)
        return self.a @ xt, d1, d2.reshape(-1, 2, 2)

    @property
    def grid(self):
        """``(atoms (M, T**2), squared norms, omegas (T**2, 2))`` on the oversampled DFT grid."""
        if self._grid is None:
            t, n = self.grid_size, self.n
            rows = self.a.reshape(-1, n, n)  # [i, n, m]
            atoms = np.fft.ifft2(rows, s=(t, t)) * (t * t)  # [i, z-index, x-index]
            atoms = atoms.reshape(self.a.shape[0], t * t)
            k = 2.0 * np.pi * np.arange(t) / t
            kz, kx = np.meshgrid(k, k, indexing="ij")
            omegas = wrap_angle(np.stack([kx.ravel(), kz.ravel()], axis=1))
            norms = np.sum(np.abs(atoms) ** 2, axis=0)
            self._grid = (atoms, norms, omegas)
        return self._grid


def _dictionary(a, config: EstimatorConfig) -> SensingDictionary:
    if isinstance(a, SensingDictionary):
        return a
    return SensingDictionary(a, config.grid_oversampling)


def _energy(r: np.ndarray) -> float:
    return float(np.vdot(r, r).real)


def _ls_gains(x: np.ndarray, target: np.ndarray) -> np.ndarray:
    return (x.conj() @ target) / np.vdot(x, x).real


# --------------------------------------------------------------------------- single path


def glrt_surface(y, a, config: EstimatorConfig | None = None) -> np.ndarray:
    """Matched-energy score ``sum_k |<x(w), y_k>|**2 / ||x(w)||**2`` on the detection grid.

    Returns a ``T x T`` array indexed ``[ix, iz]`` for ``w = (2 pi ix / T, 2 pi iz / T)``.
    """
    config = config or EstimatorConfig()
    dic = _dictionary(a, config)
    atoms, norms, _ = dic.grid
    y = np.asarray(y).reshape(dic.a.shape[0], -1)
    scores = np.sum(np.abs(atoms.conj().T @ y) ** 2, axis=1) / norms
    t = dic.grid_size
    return scores.reshape(t, t).T


def detect_single(residual, a, config: EstimatorConfig | None = None) -> PathEstimate:
    """Grid argmax of the matched-energy score plus least-squares gains."""
    config = config or EstimatorConfig()
    dic = _dictionary(a, config)
    atoms, norms, omegas = dic.grid
    residual = np.asarray(residual).reshape(dic.a.shape[0], -1)
    scores = np.sum(np.abs(atoms.conj().T @ residual) ** 2, axis=1) / norms
    i = int(np.argmax(scores))
    x = atoms[:, i]
    return PathEstimate(SpatialFrequency(*omegas[i]), _ls_gains(x, residual))


def ml_cost(omega, gains, target, a) -> float:
    """``C(w) = sum_k ||y_k - h_k x(w)||**2`` with the gains held fixed."""
    dic = a if isinstance(a, SensingDictionary) else SensingDictionary(a)
    x = dic.atom(omega)
    return _energy(target - np.outer(x, gains))


def cost_derivatives(omega, gains, target, a):
    """Gradient and Hessian of :func:`ml_cost` with respect to ``w``."""
    dic = a if isinstance(a, SensingDictionary) else SensingDictionary(a)
    x, d1, d2 = dic.derivatives(omega)
    h = np.asarray(gains)
    r = target - np.outer(x, h)
    rc = r.conj()
    grad = -2.0 * np.real((d1.T @ rc) @ h)
    cross = np.einsum("mij,mk->ijk", d2, rc) @ h
    gram = d1.conj().T @ d1
    hess = -2.0 * np.real(cross - np.sum(np.abs(h) ** 2) * gram)
    return grad, 0.5 * (hess + hess.T)


def profile_hessian(omega, gains, target, a) -> np.ndarray:
    """Hessian of the cost with the gains eliminated by least squares.

    Schur complement of the joint (frequency, gain) Hessian:
    ``H - (2/||x||**2) sum_k Re(conj(b_k) b_k^T)`` with
    ``b_ki = -<d_i x, r_k> + h_k <x, d_i x>``.  Equal to the Hessian of the
    concentrated cost when ``gains`` are the least-squares gains at ``omega``.
    """
    dic = a if isinstance(a, SensingDictionary) else SensingDictionary(a)
    x, d1, _ = dic.derivatives(omega)
    h = np.asarray(gains)
    r = target - np.outer(x, h)
    _, hess = cost_derivatives(omega, h, target, dic)
    b = -(d1.conj().T @ r).T + np.outer(h, x.conj() @ d1)  # (L, 2)
    corr = np.real(b.conj().T @ b) * (2.0 / np.vdot(x, x).real)
    out = hess - corr
    return 0.5 * (out + out.T)


def refine_newton(est: PathEstimate, target, a, config: EstimatorConfig | None = None,
                  iters: int | None = None) -> PathEstimate:
    """Alternate a Newton step on ``w`` with a least-squares gain update.

    A step is kept only if the cost after the gain update does not exceed the
    current cost.  When the Hessian is not positive definite a gradient step
    scaled by the largest Gauss-Newton curvature is used instead.  Steps are
    backtracked and limited to half a DFT bin per axis.
    """
    config = config or EstimatorConfig()
    dic = _dictionary(a, config)
    target = np.asarray(target).reshape(dic.a.shape[0], -1)
    omega = np.array(tuple(est.omega), dtype=float)
    h = np.asarray(est.gains, dtype=complex)
    cap = math.pi / dic.n
    cost = _energy(target - np.outer(dic.atom(omega), h))
    for _ in range(iters or config.newton_iters):
        grad, hess = cost_derivatives(omega, h, target, dic)
        if not np.all(np.isfinite(grad)) or np.max(np.abs(grad)) == 0.0:
            break
        if config.hessian == "profile":
            hess = profile_hessian(omega, h, target, dic)
        eig = np.linalg.eigvalsh(hess)
        if eig[0] > 0:
            step = -np.linalg.solve(hess, grad)
        else:
            _, d1, _ = dic.derivatives(omega)
            gn = 2.0 * np.sum(np.abs(h) ** 2) * np.real(d1.conj().T @ d1)
            scale = np.linalg.eigvalsh(gn)[-1]
            if scale <= 0:
                break
            step = -grad / scale
        big = np.max(np.abs(step))
        if big > cap:
            step *= cap / big
        for _ in range(40):
            cand = wrap_angle(omega + step)
            x = dic.atom(cand)
            h_cand = _ls_gains(x, target)
            cand_cost = _energy(target - np.outer(x, h_cand))
            if cand_cost <= cost:
                break
            step = step / 2.0
        else:
            break
        omega, h, cost = cand, h_cand, cand_cost
        if np.max(np.abs(step)) < 1e-14:
            break
    return PathEstimate(SpatialFrequency(*omega), h)


# --------------------------------------------------------------------------- multipath


def _residual(y, dic: SensingDictionary, paths: Sequence[PathEstimate]) -> np.ndarray:
    if not paths:
        return y.copy()
    x = dic.atoms([tuple(p.omega) for p in paths])
    g = np.stack([p.gains for p in paths])
    return y - x @ g


def _refine_all(paths: list, y, dic, config, trace, label="refine") -> list:
    paths = list(paths)
    if not paths:
        return paths
    r = _residual(y, dic, paths)
    for _ in range(config.refine_rounds):
        for i, p in enumerate(paths):
            target = r + np.outer(dic.atom(tuple(p.omega)), p.gains)
            q = refine_newton(p, target, dic, config)
            paths[i] = q
            r = target - np.outer(dic.atom(tuple(q.omega)), q.gains)
            trace.append({"step": label, "path": i, "omega": tuple(q.omega), "residual_energy": _energy(r)})
    if config.joint_polish and len(paths) > 1:
        polished = _polish(paths, y, dic, config)
        if polished is not None:
            paths = polished
            trace.append({"step": "polish", "residual_energy": _energy(_residual(y, dic, paths))})
    return paths


def _polish(paths: list, y, dic, config) -> list | None:
    """Joint refinement of all frequencies with the gains projected out.

    Minimizes ``||P_perp(X(w)) Y||**2`` by Levenberg-Marquardt with the
    Kaufman Jacobian ``-P_perp d_i g_k^T``.  Returns ``None`` unless the
    residual energy decreases, so the caller's monotonicity is preserved.
    """
    k = len(paths)
    w0 = np.array([tuple(p.omega) for p in paths], dtype=float).ravel()
    m, cols = y.shape

    def parts(w):
        om = w.reshape(k, 2)
        x = dic.atoms(om)
        q, _ = np.linalg.qr(x)
        g = np.linalg.lstsq(x, y, rcond=None)[0]
        r = y - x @ g
        return om, q, g, r

    def fun(w):
        r = parts(w)[3].ravel()
        return np.concatenate([r.real, r.imag])

    def jac(w):
        om, q, g, _ = parts(w)
        out = np.empty((m * cols, 2 * k), dtype=complex)
        for i in range(k):
            _, d1, _ = dic.derivatives(om[i])
            pd = d1 - q @ (q.conj().T @ d1)
            for a in range(2):
                out[:, 2 * i + a] = -np.outer(pd[:, a], g[i]).ravel()
        return np.vstack([out.real, out.imag])

    start = _energy(_residual(y, dic, paths))
    try:
        sol = optimize.least_squares(fun, w0, jac=jac, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15,
                                     max_nfev=config.polish_max_evals)
    except (np.linalg.LinAlgError, ValueError):
        return None
    omegas = wrap_angle(sol.x.reshape(k, 2))
    g = _joint_gains(y, dic, omegas)
    out = [PathEstimate(SpatialFrequency(*w), g[i]) for i, w in enumerate(omegas)]
    if not _energy(_residual(y, dic, out)) < start:
        return None
    return out


def _joint_gains(y, dic, omegas) -> np.ndarray:
    """Least-squares gains for fixed frequencies, ridge-stabilized when ill-conditioned."""
    x = dic.atoms(omegas)
    gram = x.conj().T @ x
    k = gram.shape[0]
    if np.linalg.cond(gram) > 1e8:
        gram = gram + 1e-8 * np.trace(gram).real / k * np.eye(k)
    return np.linalg.solve(gram, x.conj().T @ y)


def _linf_wrapped(a, b) -> float:
    return float(np.max(np.abs(wrap_angle(np.asarray(a) - np.asarray(b)))))


def _dedupe(paths: list, y, dic) -> list:
    kept: list = []
    for p in paths:
        if all(_linf_wrapped(p.omega, q.omega) > 1e-6 for q in kept):
            kept.append(p)
    if len(kept) < len(paths) and kept:
        g = _joint_gains(y, dic, [tuple(p.omega) for p in kept])
        kept = [PathEstimate(p.omega, g[i]) for i, p in enumerate(kept)]
    return kept


def estimate(y, a, sigma2: float, config: EstimatorConfig | None = None,
             warm_start: Iterable[PathEstimate] | None = None) -> EstimateSet:
    """Sequentially detect, refine and accept paths until the residual payoff drops below ``tau``.

    ``warm_start`` paths (with gains already set) are refined first and then
    extended.  The returned set carries a trace of every detection, refinement
    and acceptance decision with the residual energy after it.
    """
    config = config or EstimatorConfig()
    dic = _dictionary(a, config)
    y = np.asarray(y).reshape(dic.a.shape[0], -1)
    tau = config.tau(sigma2, dic.n)
    trace: list = []
    paths = list(warm_start or [])
    if paths:
        paths = _refine_all(paths, y, dic, config, trace)
    energy = _energy(_residual(y, dic, paths))
    trace.append({"step": "init", "n_paths": len(paths), "residual_energy": energy, "tau": tau})
    bin_width = 2.0 * math.pi / dic.n
    capped = False
    while True:
        if len(paths) >= config.max_paths:
            capped = True
            break
        r = _residual(y, dic, paths)
        new = detect_single(r, dic, config)
        trace.append({"step": "detect", "omega": tuple(new.omega),
                      "residual_energy": _energy(r - np.outer(dic.atom(tuple(new.omega)), new.gains))})
        new = refine_newton(new, r, dic, config)
        if any(_linf_wrapped(new.omega, p.omega) < config.merge_fraction * bin_width for p in paths):
            trace.append({"step": "merge", "omega": tuple(new.omega), "residual_energy": energy})
            paths = _refine_all(paths, y, dic, config, trace)
            energy = _energy(_residual(y, dic, paths))
            break
        cand_trace: list = []
        candidate = _refine_all(paths + [new], y, dic, config, cand_trace)
        cand_energy = _energy(_residual(y, dic, candidate))
        reduction = energy - cand_energy
        if reduction > tau:
            trace.extend(cand_trace)
            trace.append({"step": "accept", "omega": tuple(new.omega), "residual_energy": cand_energy,
                          "reduction": reduction, "tau": tau})
            paths, energy = candidate, cand_energy
        else:
            trace.append({"step": "reject", "omega": tuple(new.omega), "residual_energy": energy,
                          "reduction": reduction, "tau": tau})
            break
    return EstimateSet(_dedupe(paths, y, dic), capped, trace)


def track(prev: EstimateSet | Sequence[PathEstimate], y, a, sigma2: float,
          config: EstimatorConfig | None = None) -> EstimateSet:
    """Warm-started estimate for a new sounding round.

    Gains for the previous frequencies are re-fit jointly by least squares,
    all paths are refined, any path whose removal (with the remaining gains
    re-fit) raises the residual by less than ``tau`` is dropped, and the usual
    detection loop then looks for new paths.
    """
    config = config or EstimatorConfig()
    dic = _dictionary(a, config)
    y = np.asarray(y).reshape(dic.a.shape[0], -1)
    prev_paths = list(prev.paths if isinstance(prev, EstimateSet) else prev)
    if not prev_paths:
        return estimate(y, dic, sigma2, config)
    tau = config.tau(sigma2, dic.n)
    trace: list = []
    omegas = [tuple(p.omega) for p in prev_paths]
    g = _joint_gains(y, dic, omegas)
    paths = [PathEstimate(SpatialFrequency(*w), g[i]) for i, w in enumerate(omegas)]
    paths = _refine_all(paths, y, dic, config, trace)
    paths = _dedupe(paths, y, dic)

    changed = True
    while changed and paths:
        changed = False
        energy = _energy(_residual(y, dic, paths))
        for i in sorted(range(len(paths)), key=lambda j: paths[j].energy):
            others = [p for j, p in enumerate(paths) if j != i]
            if others:
                g = _joint_gains(y, dic, [tuple(p.omega) for p in others])
                others = [PathEstimate(p.omega, g[j]) for j, p in enumerate(others)]
            increase = _energy(_residual(y, dic, others)) - energy
            if increase < tau:
                trace.append({"step": "delete", "omega": tuple(paths[i].omega),
                              "residual_energy": energy + increase, "increase": increase, "tau": tau})
                paths = others
                changed = True
                break

    result = estimate(y, dic, sigma2, config, warm_start=paths)
    result.trace = trace + result.trace
    return result
