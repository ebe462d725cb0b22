import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special
from scipy.linalg import eigh

from mmwave_cs.geometry import steering_matrix
from mmwave_cs.planner import (BoundQuery, LinkParams, ProtocolParams, ReuseQuery, bound_curves, comm_snr, crb_freq,
                               dilogarithm, isometry_check_tx, isometry_ratios, min_sounding_time,
                               noise_limited_gate_db, overhead, plan, reuse_sir, rx_degradation_db, rx_sweep,
                               smallest_reuse_factor, sounding_bandwidth, sounding_rate, system_bandwidth,
                               threshold_snr, transmit_power, tx_sweep, zzb_freq)
from mmwave_cs.planner.bounds import q_function
from mmwave_cs.sounding import generate_weights

# ------------------------------------------------------------------ bounds


def test_crb_examples():
    assert crb_freq(BoundQuery(2, 1.0)) == pytest.approx(2.0)
    q1, q2 = BoundQuery(8, 40.0), BoundQuery(8, 80.0)
    assert crb_freq(q2) == pytest.approx(crb_freq(q1) / 2, rel=1e-15)


def test_q_function_matches_normal_tail():
    for x in (-2.0, 0.0, 0.5, 3.0, 8.0):
        assert q_function(x) == pytest.approx(special.ndtr(-x), rel=1e-12, abs=1e-300)


def test_zzb_low_snr_limit():
    assert zzb_freq(BoundQuery(8, 1e-12)) == pytest.approx(math.pi ** 2 / 4, rel=1e-6)


def test_zzb_converges_to_crb():
    for n in (8, 32):
        q = BoundQuery(n, 10 ** 6)
        assert zzb_freq(q) / crb_freq(q) == pytest.approx(1.0, abs=1e-3)


def test_zzb_not_below_crb_and_monotone():
    # below about -14 dB the CRB exceeds the prior variance pi**2/4 and the comparison loses meaning
    snr_db = np.linspace(-10, 60, 36)
    for n in (8, 16, 32):
        rows = bound_curves(n, snr_db)
        assert np.all(rows[:, 2] >= rows[:, 1] * (1 - 1e-9))
        assert np.all(np.diff(rows[:, 1]) <= 0)
        assert np.all(np.diff(rows[:, 2]) <= 1e-15)


def test_threshold_consistent_with_bounds():
    th = threshold_snr(8)
    q_at = BoundQuery(8, 10 ** (th / 10))
    q_below = BoundQuery(8, 10 ** ((th - 0.02) / 10))
    assert 10 * math.log10(zzb_freq(q_at) / crb_freq(q_at)) <= 0.1
    assert 10 * math.log10(zzb_freq(q_below) / crb_freq(q_below)) > 0.1


def test_threshold_flat_in_array_size():
    values = [threshold_snr(n) for n in (8, 16, 32, 64)]
    assert max(values) - min(values) < 0.5


def test_bound_query_validation():
    with pytest.raises(ValueError):
        BoundQuery(1, 1.0)
    with pytest.raises(ValueError):
        BoundQuery(8, 0.0)


# ------------------------------------------------------------------ link budget


@pytest.mark.parametrize("n_t,total,element", [(8, 22, 4), (32, 10, -20)])
def test_transmit_power_examples(n_t, total, element):
    p, pe = transmit_power(40.0, n_t)
    assert round(p) == total and round(pe) == element


def test_transmit_power_single_element():
    assert transmit_power(37.5, 1) == (37.5, 37.5)
    with pytest.raises(ValueError):
        transmit_power(40.0, 0)


def test_comm_snr_at_100m():
    assert abs(comm_snr(LinkParams(), 100.0) - 7.0) <= 0.2


def test_comm_snr_range_claim_without_noise_figure():
    assert abs(comm_snr(LinkParams(noise_figure_db=0.0), 200.0) - 6.0) <= 0.2


@given(st.floats(0.0, 30.0), st.floats(1.0, 500.0))
def test_comm_snr_margin_is_linear(x, r):
    base = comm_snr(LinkParams(), r)
    assert comm_snr(LinkParams(comm_margin_db=10.0 + x), r) == pytest.approx(base - x, abs=1e-9)


@pytest.mark.parametrize("n_t,expected", [(8, 16.34e-6), (32, 0.2669e-3)])
def test_min_sounding_time(n_t, expected):
    t = min_sounding_time(LinkParams(n_t=n_t), n_t, threshold_snr(n_t))
    assert t == pytest.approx(expected, rel=0.01)


def test_min_sounding_time_degenerate_identity():
    link = LinkParams(n_r=1, est_margin_db=10.0, comm_margin_db=10.0)
    th = 16.0
    expected = 10 ** ((th - link.design_snr_db) / 10) / link.comm_bandwidth
    assert min_sounding_time(link, 1, th) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("m,l,t,expected", [(24, 6, 16.34e-6, 8.8124e6), (30, 6, 0.2669e-3, 674.34e3)])
def test_sounding_bandwidth_examples(m, l, t, expected):
    assert sounding_bandwidth(m, l, t) == pytest.approx(expected, rel=1e-3)
    assert sounding_bandwidth(2 * m, l, t) == pytest.approx(2 * sounding_bandwidth(m, l, t))


@pytest.mark.parametrize("n_t,expected", [(8, 8.0), (32, 32.0)])
def test_sounding_rate_examples(n_t, expected):
    assert sounding_rate(2.5e-3, 5e-3, 20.0, 20.0, n_t) == pytest.approx(expected, rel=1e-12)


def test_sounding_rate_static_users():
    assert sounding_rate(2.5e-3, 5e-3, 0.0, 20.0, 8) == 0.0


@pytest.mark.parametrize("m,f_b,w_s,expected", [(24, 8, 8.8124e6, 1.31e-4), (30, 32, 674.34e3, 8.542e-3)])
def test_overhead_examples(m, f_b, w_s, expected):
    assert overhead(ProtocolParams(m, 6, w_s, f_b)) == pytest.approx(expected, abs=1e-5)


def test_overhead_vanishes_with_rate():
    assert overhead(ProtocolParams(24, 6, 8.8124e6, 1e-12)) < 1e-15


def test_protocol_validation():
    with pytest.raises(ValueError):
        ProtocolParams(24, 6, 100.0, 8.0)  # overhead above 1
    with pytest.raises(ValueError):
        LinkParams(comm_bandwidth=0.0)


# ------------------------------------------------------------------ reuse


def test_dilogarithm_examples():
    assert dilogarithm(0.0) == 0.0
    assert dilogarithm(1.0 - 1e-12) == pytest.approx(math.pi ** 2 / 6, abs=1e-9)
    k = np.arange(1, 10 ** 6 + 1, dtype=float)
    assert dilogarithm(0.5) == pytest.approx(float(np.sum(0.5 ** k / k ** 2)), rel=1e-14)


@given(st.floats(0.0, 1.0))
def test_dilogarithm_matches_scipy(z):
    assert dilogarithm(z) == pytest.approx(special.spence(1.0 - z), rel=1e-12, abs=1e-15)


def test_dilogarithm_domain():
    with pytest.raises(ValueError):
        dilogarithm(1.5)


def test_reuse_closed_form_without_absorption():
    sir = reuse_sir(ReuseQuery(50.0, 1, 24, 6, mu=0.0))
    assert sir == pytest.approx(10 * math.log10(144 * 6 / (8 * math.pi ** 2)), rel=1e-12)


def _direct_sir(s, r_f, m, l, mu, terms=10 ** 6):
    nu = mu / 10 * math.log(10)
    k = np.arange(1, terms + 1, dtype=float)
    d = k * r_f * s
    interference = 8 * np.sum(np.exp(-nu * d) / d ** 2)
    return 10 * math.log10(m * l * math.exp(-nu * s) / s ** 2 / interference)


@pytest.mark.parametrize("s,r_f", [(50.0, 1), (50.0, 4), (200.0, 3), (120.0, 2)])
def test_reuse_matches_direct_sum(s, r_f):
    exact = 10 ** (reuse_sir(ReuseQuery(s, r_f, 24, 6, 0.016)) / 10)
    direct = 10 ** (_direct_sir(s, r_f, 24, 6, 0.016) / 10)
    assert exact == pytest.approx(direct, rel=1e-9)


def test_reuse_monotone():
    for s in (20.0, 50.0, 200.0):
        sirs = [reuse_sir(ReuseQuery(s, r)) for r in range(1, 10)]
        assert np.all(np.diff(sirs) > 0)
    for r in (1, 3):
        sirs = [reuse_sir(ReuseQuery(s, r)) for s in (10.0, 50.0, 100.0, 300.0)]
        assert np.all(np.diff(sirs) > 0)


@pytest.mark.parametrize("s,expected", [(50.0, 4), (200.0, 3)])
def test_smallest_reuse_factor(s, expected):
    gate = noise_limited_gate_db(threshold_snr(8))
    assert gate == pytest.approx(26.04, abs=0.01)
    assert smallest_reuse_factor(24, 6, s, gate) == expected


def test_system_bandwidth_examples():
    assert system_bandwidth(674.34e3, 4) == pytest.approx(2.7e6, rel=1e-3)
    assert system_bandwidth(8.8124e6, 1) == 8.8124e6


def test_system_bandwidth_8x8():
    assert system_bandwidth(8.8124e6, 4) == pytest.approx(35.2e6, rel=1e-3)


# ------------------------------------------------------------------ isometry


def test_small_isometry_matches_exhaustive_envelope():
    # every ratio lies between the extreme generalized eigenvalues over all on-grid supports
    n, ov, s, m = 4, 2, 2, 6
    t = n * ov
    a = generate_weights(m, n * n, 3)
    k = 2 * np.pi * np.arange(t) / t
    x = steering_matrix(n, np.array([(k[i % t], k[i // t]) for i in range(t * t)]))
    ax = a @ x
    lo, hi = math.inf, 0.0
    for sup in itertools.combinations(range(t * t), s):
        sup = list(sup)
        ev = eigh(ax[:, sup].conj().T @ ax[:, sup], m * x[:, sup].conj().T @ x[:, sup], eigvals_only=True)
        lo, hi = min(lo, ev[0]), max(hi, ev[-1])
    r = isometry_ratios(a, n, s, ov, 400_000, seed=1)
    assert r.min() >= lo * (1 - 1e-9) and r.max() <= hi * (1 + 1e-9)
    assert 10 * math.log10(r.min() / lo) < 0.5 and 10 * math.log10(hi / r.max()) < 0.5


def test_isometry_unitary_weights_give_unit_ratio():
    # scaled DFT: ||A x||**2 = 16 ||x||**2 = M ||x||**2
    r = isometry_ratios(np.fft.fft(np.eye(16)), 4, 3, 4, 2000, seed=0)
    np.testing.assert_allclose(r, 1.0, rtol=1e-9)


def test_isometry_concentrates_at_full_size():
    lo, hi = isometry_check_tx(8, 64, 8, 4, 5000, seed=0)
    lo_s, hi_s = isometry_check_tx(8, 16, 8, 4, 5000, seed=0)
    assert hi - lo < hi_s - lo_s
    assert -3.0 < 10 * math.log10(lo) and 10 * math.log10(hi) < 2.0


def test_isometry_deterministic():
    assert isometry_check_tx(8, 20, 4, 4, 3000, seed=5) == isometry_check_tx(8, 20, 4, 4, 3000, seed=5)
    assert tx_sweep(8, [12, 20], 4, 4, 1000, 2) == tx_sweep(8, [12, 20], 4, 4, 1000, 2)


def test_isometry_rejects_oversized_support():
    with pytest.raises(ValueError):
        isometry_ratios(generate_weights(4, 4, 0), 2, 17, 2, 10)


def test_rx_degradation_shrinks_with_l():
    rows = rx_sweep(4, [2, 6, 10], 300, 4, seed=0)
    assert [r[0] for r in rows] == [2, 6, 10]
    assert rows[0][1] > rows[1][1] > rows[2][1] > 0
    assert rx_degradation_db(4, 6, 300, 4, seed=3) == rx_degradation_db(4, 6, 300, 4, seed=3)


# ------------------------------------------------------------------ plan table


def test_plan_table_desk_values():
    table = plan(LinkParams(), 24, 6)
    assert table["threshold_snr_db"] == pytest.approx(16.04, abs=0.1)
    assert table["w_s_hz"] == pytest.approx(8.8124e6, rel=1e-3)
    assert table["f_b_hz"] == pytest.approx(8.0)
    assert table["r_f"] == 4
    assert table["system_bandwidth_hz"] == pytest.approx(4 * table["w_s_hz"])
    assert table["overhead"] == pytest.approx(24 * 6 * 8 / table["w_s_hz"])
