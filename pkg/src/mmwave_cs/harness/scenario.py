"""Round-by-round simulation: move users, trace, sound, feed back, estimate or track, score."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace
from typing import Iterator

import numpy as np

from ..channel import assemble_channel
from ..estimator import EstimateSet, estimate, track
from ..geometry import frequencies_of, trace_paths
from ..planner import min_sounding_time, sounding_bandwidth, sounding_rate, threshold_snr, transmit_power
from ..sounding import generate_weights, make_feedback, measure, noise_variance, select_rx_weights
from .config import ScenarioConfig
from .metrics import beamforming_gain, error_metric, wrapped_distances

# stream tags for np.random.default_rng([seed, tag, ...])
_A_STREAM, _B_STREAM, _NOISE_STREAM = 0, 1, 2


@dataclass(frozen=True)
class MetricsRecord:
    round: int
    time_s: float
    user: int
    path: int
    kind: str
    k_hat: int
    delta_omega: float
    omega_x: float
    omega_z: float
    omega_hat_x: float
    omega_hat_z: float
    beam_target: bool
    gain_ideal_db: float
    gain_four_phase_db: float
    runtime_ms: float = float("nan")


@dataclass(frozen=True)
class RunParameters:
    """Planner-derived quantities used by a run."""

    w_s: float
    f_b: float
    n_rounds: int
    pe_w: float
    sigma2: float
    threshold_db: float


def run_parameters(config: ScenarioConfig) -> RunParameters:
    link, proto = config.link, config.protocol
    n_t = config.n_t
    n_r = config.users[0].n_1d
    th = threshold_snr(n_t)
    w_s = proto.w_s
    if w_s is None:
        w_s = sounding_bandwidth(proto.m, proto.l, min_sounding_time(replace(link, n_r=n_r), n_t, th))
    f_b = proto.f_b
    if f_b is None:
        v_max = max(proto.v_max, max(u.max_speed() for u in config.users))
        f_b = sounding_rate(link.wavelength / 2.0, link.wavelength, v_max, proto.r_min, n_t)
    if not f_b > 0:
        raise ValueError("sounding rate must be positive (set protocol.f_b or a non-zero v_max)")
    _, pe_dbm = transmit_power(link.eirp_dbm, n_t)
    n0 = link.noise_density_w_hz
    return RunParameters(
        w_s=float(w_s),
        f_b=float(f_b),
        n_rounds=int(math.floor(config.duration * f_b + 1e-9)) + 1,
        pe_w=10.0 ** ((pe_dbm - 30.0) / 10.0),
        sigma2=noise_variance(n_r, n0, w_s, proto.interference_w),
        threshold_db=th,
    )


def _score(round_idx, t, user, paths, est: EstimateSet, n_t, tx, runtime_ms) -> list[MetricsRecord]:
    true_w = frequencies_of(paths, "t")
    est_w = est.omegas()
    errs = error_metric(true_w, est_w, n_t)
    if len(est_w):
        nearest = wrapped_distances(true_w, est_w).argmin(axis=1)
        strongest = est.strongest()
        w_hat = tuple(strongest.omega)
        target = int(np.argmin(wrapped_distances(true_w, [w_hat])[:, 0]))
        g_ideal = beamforming_gain(w_hat, true_w, tx, "ideal")
        g_quant = beamforming_gain(w_hat, true_w, tx, "four_phase")
    else:
        nearest, target, g_ideal, g_quant = None, -1, float("nan"), float("nan")
    out = []
    for i, p in enumerate(paths):
        hat = est_w[nearest[i]] if nearest is not None else (float("nan"), float("nan"))
        hit = i == target
        out.append(MetricsRecord(
            round=round_idx, time_s=t, user=user, path=i, kind=p.kind, k_hat=len(est),
            delta_omega=float(errs[i]), omega_x=float(true_w[i, 0]), omega_z=float(true_w[i, 1]),
            omega_hat_x=float(hat[0]), omega_hat_z=float(hat[1]), beam_target=hit,
            gain_ideal_db=g_ideal if hit else float("nan"),
            gain_four_phase_db=g_quant if hit else float("nan"),
            runtime_ms=runtime_ms,
        ))
    return out


def run_scenario(config: ScenarioConfig, params: RunParameters | None = None) -> Iterator[MetricsRecord]:
    """Yield one record per (round, user, true path), in that order.

    ``A`` (shared by all users) and each user's ``B`` are redrawn every round.
    Randomness is drawn from independent streams keyed on ``(seed, round, user)``
    so results do not depend on processing order.  Only the runtime field is
    non-deterministic.
    """
    params = params or run_parameters(config)
    scene = config.scene
    tx = scene.bs_array
    n_t = tx.n_1d
    proto, fb = config.protocol, config.feedback
    lam = scene.wavelength

    state: list[EstimateSet | None] = [None] * len(config.users)

    for r in range(params.n_rounds):
        t = r / params.f_b
        a = generate_weights(proto.m, tx.n_elements, np.random.default_rng([config.seed, _A_STREAM, r]))
        for k, user in enumerate(config.users):
            start = time.perf_counter()
            mobile = user.state(t, lam)
            paths = trace_paths(scene, mobile)
            h = assemble_channel(paths, tx, mobile.array)
            b = select_rx_weights(user.n_1d, proto.l, proto.rx_candidates, proto.rx_grid_oversampling,
                                  seed=np.random.default_rng([config.seed, _B_STREAM, r, k]))
            sigma2 = noise_variance(user.n_1d, config.link.noise_density_w_hz, params.w_s, proto.interference_w)
            vc = measure(h, a, b, params.pe_w, sigma2,
                         seed=np.random.default_rng([config.seed, _NOISE_STREAM, r, k]))
            payload = make_feedback(vc, fb.mode, fb.rank)
            if state[k] is None:
                est = estimate(payload.data, a, sigma2, config.estimator)
            else:
                est = track(state[k], payload.data, a, sigma2, config.estimator)
            state[k] = est
            runtime = (time.perf_counter() - start) * 1e3
            yield from _score(r, t, k, paths, est, n_t, tx, runtime)
