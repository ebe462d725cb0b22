"""Inter-cell beacon interference along a regular line of co-channel basestations."""
from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class ReuseQuery:
    s: float  # inter-basestation spacing, m
    r_f: int
    m: int = 24
    l: int = 6
    mu: float = 0.016

    def __post_init__(self):
        if not self.s > 0:
            raise ValueError("spacing must be positive")
        if self.r_f < 1:
            raise ValueError("reuse factor must be >= 1")

    @property
    def nu(self) -> float:
        """Absorption in nepers-of-power per metre, ``(mu/10) ln 10``."""
        return self.mu / 10.0 * math.log(10.0)


def dilogarithm(z: float) -> float:
    """``Li2(z) = sum z**k / k**2`` for ``0 <= z <= 1``.

    Direct series for ``z <= 1/2``; Euler's reflection
    ``Li2(z) = pi**2/6 - ln z ln(1-z) - Li2(1-z)`` above that.
    """
    if not 0.0 <= z <= 1.0:
        raise ValueError("dilogarithm implemented on [0, 1]")
    if z == 1.0:
        return math.pi ** 2 / 6.0
    if z > 0.5:
        return math.pi ** 2 / 6.0 - math.log(z) * math.log1p(-z) - dilogarithm(1.0 - z)
    total, term, k = 0.0, z, 1
    while True:
        add = term / (k * k)
        total += add
        if add < 1e-17 * max(total, 1e-300):
            return total
        k += 1
        term *= z


def reuse_sir(q: ReuseQuery) -> float:
    """Effective SIR in dB for a user at distance ``S`` with co-channel cells at ``k R_f S``.

    ``M L R_f**2 exp(-nu S) / (8 Li2(exp(-nu R_f S)))``; the 8 counts four
    equal-strength paths from interferers on each side.
    """
    nu = q.nu
    lin = q.m * q.l * q.r_f ** 2 * math.exp(-nu * q.s) / (8.0 * dilogarithm(math.exp(-nu * q.r_f * q.s)))
    return 10.0 * math.log10(lin)


def noise_limited_gate_db(threshold_db: float, factor: float = 0.1) -> float:
    """SIR needed so interference stays below ``factor`` of the noise at the threshold SNR."""
    return threshold_db - 10.0 * math.log10(factor)


def smallest_reuse_factor(m: int, l: int, s: float, gate_db: float, mu: float = 0.016, r_f_max: int = 64) -> int:
    for r_f in range(1, r_f_max + 1):
        if reuse_sir(ReuseQuery(s, r_f, m, l, mu)) > gate_db:
            return r_f
    raise ValueError(f"no reuse factor up to {r_f_max} clears {gate_db:.2f} dB")


def system_bandwidth(w_s: float, r_f: int) -> float:
    return w_s * r_f
