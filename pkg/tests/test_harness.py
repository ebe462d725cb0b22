import copy
import io
import json
import math

import numpy as np
import pytest
import yaml
from hypothesis import given
from hypothesis import strategies as st

from mmwave_cs.geometry import ArrayConfig, steering_vector
from mmwave_cs.harness import cli
from mmwave_cs.harness.config import ConfigError, UserSpec, build_config, default_config, load_config
from mmwave_cs.harness.metrics import beam_weights, beamforming_gain, error_metric, quantize_weights
from mmwave_cs.harness.report import SCHEMA, k_hat_histogram, k_hat_modes, summarize, write_csv
from mmwave_cs.harness.scenario import run_parameters, run_scenario

BIN = 2 * math.pi / 8
EXAMPLE = __file__.replace("tests/test_harness.py", "configs/desk_scenario.yaml")


# ------------------------------------------------------------------ metrics


def test_error_metric_examples():
    true = [(0.1, 0.2), (-1.0, 2.0)]
    np.testing.assert_array_equal(error_metric(true, true, 8), [0.0, 0.0])
    assert error_metric([(0.3, 0.0)], [(0.3 + BIN, 0.0)], 8)[0] == pytest.approx(1.0)
    assert np.all(np.isinf(error_metric(true, [], 8)))
    with pytest.raises(ValueError):
        error_metric([], true, 8)


def test_error_metric_wraps_across_pi():
    assert error_metric([(math.pi - 0.01, 0.0)], [(-math.pi + 0.01, 0.0)], 8)[0] == pytest.approx(0.02 / BIN)


@given(st.integers(0, 10 ** 6), st.integers(1, 6), st.integers(1, 6))
def test_error_metric_matches_brute_force(seed, k, k_hat):
    rng = np.random.default_rng(seed)
    true = rng.uniform(-math.pi, math.pi, (k, 2))
    est = rng.uniform(-math.pi, math.pi, (k_hat, 2))
    brute = []
    for t in true:
        best = math.inf
        for e in est:
            for sx in (-2 * math.pi, 0.0, 2 * math.pi):
                for sz in (-2 * math.pi, 0.0, 2 * math.pi):
                    best = min(best, math.hypot(t[0] - e[0] - sx, t[1] - e[1] - sz))
        brute.append(best / BIN)
    np.testing.assert_allclose(error_metric(true, est, 8), brute, rtol=1e-12)


def test_quantize_examples():
    np.testing.assert_array_equal(quantize_weights(np.array([0.3, 2.0, 1e-3])), [1, 1, 1])
    eps = 1e-6
    assert quantize_weights(np.exp(1j * math.pi / 4 * (1 + eps))) == 1j
    assert quantize_weights(np.exp(1j * math.pi / 4 * (1 - eps))) == 1
    assert quantize_weights(np.exp(1j * math.pi / 4)) == 1
    assert quantize_weights(np.exp(-1j * math.pi * 0.9)) == -1
    w = np.exp(1j * np.random.default_rng(0).uniform(-math.pi, math.pi, 100))
    np.testing.assert_allclose(np.abs(quantize_weights(w)), 1.0)


def test_four_phase_gain_fraction():
    # phase error uniform on [-pi/4, pi/4] gives E cos = 2 sqrt(2) / pi
    rng = np.random.default_rng(1)
    n = 64
    ratios = []
    for _ in range(4000):
        w = np.exp(1j * rng.uniform(-math.pi, math.pi, n))
        q = quantize_weights(w)
        ratios.append(abs(np.vdot(q, w)) ** 2 / n ** 2)
    bound = (2 * math.sqrt(2) / math.pi) ** 2
    se = np.std(ratios) / math.sqrt(len(ratios))
    assert np.mean(ratios) >= bound - 4 * se


def test_perfect_beam_gain():
    tx = ArrayConfig(8)
    for w in [(0.0, 0.0), (1.1, -2.3), (-math.pi, 0.5)]:
        assert beamforming_gain(w, [w], tx, "ideal") == pytest.approx(20 * math.log10(8), abs=1e-12)
        assert beamforming_gain(w, [w], tx, "four_phase") <= 20 * math.log10(8) + 1e-12


def test_beam_gain_targets_nearest_path():
    tx = ArrayConfig(8)
    paths = [(0.0, 0.0), (2.0, 2.0)]
    g = beamforming_gain((1.95, 2.0), paths, tx)
    x = steering_vector(tx, (2.0, 2.0))
    w = beam_weights((1.95, 2.0), tx)
    assert g == pytest.approx(10 * math.log10(abs(w @ x) ** 2))
    assert np.linalg.norm(beam_weights((0.3, 0.1), tx, "four_phase")) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        beam_weights((0, 0), tx, "analog")


# ------------------------------------------------------------------ config


def _raw(**over):
    raw = default_config()
    raw["duration"] = 0.25
    for k, v in over.items():
        raw[k] = v
    return raw


def _errors(raw):
    with pytest.raises(ConfigError) as exc:
        build_config(raw)
    return dict(exc.value.errors)


def test_default_and_example_configs_load():
    cfg = build_config(default_config())
    assert cfg.n_t == 8 and len(cfg.users) == 6
    ex = load_config(EXAMPLE)
    assert ex.n_t == 8 and len(ex.users) == 6 and ex.feedback.mode == "full"
    assert load_config(EXAMPLE, {"seed": 7, "feedback": {"mode": "svd"}}).seed == 7


@pytest.mark.parametrize("mutate,field", [
    (lambda r: r.update(duration=0), "duration"),
    (lambda r: r.update(seed=-1), "seed"),
    (lambda r: r.update(users=[]), "users"),
    (lambda r: r.update(bogus=1), "bogus"),
    (lambda r: r["protocol"].update(m=0), "protocol.m"),
    (lambda r: r["protocol"].update(colour="red"), "protocol.colour"),
    (lambda r: r["feedback"].update(mode="partial"), "feedback.mode"),
    (lambda r: r["feedback"].update(mode="svd", rank=9), "feedback.rank"),
    (lambda r: r["scene"].update(n_t=1), "scene.n_t"),
    (lambda r: r["users"][0].update(position=[1.0, 2.0]), "users[0].position"),
    (lambda r: r["users"][2].update(velocity=[0.0, 60.0, 0.0]), "users[2]"),
])
def test_config_field_level_errors(mutate, field):
    raw = _raw()
    mutate(raw)
    assert field in _errors(raw)


def test_config_collects_several_errors():
    raw = _raw(duration=-1.0, seed="x")
    assert {"duration", "seed"} <= set(_errors(raw))


def test_waypoint_user():
    u = UserSpec(waypoints=((0.0, 20.0, 5.0, 1.3), (1.0, 30.0, 5.0, 1.3), (2.0, 30.0, 10.0, 1.3)))
    np.testing.assert_allclose(u.position_at(0.5), (25.0, 5.0, 1.3))
    np.testing.assert_allclose(u.velocity_at(1.5), (0.0, 5.0, 0.0))
    np.testing.assert_allclose(u.position_at(5.0), (30.0, 10.0, 1.3))
    assert u.max_speed() == pytest.approx(10.0)
    raw = _raw(users=[{"waypoints": [[0.0, 20.0, 5.0, 1.3], [1.0, 30.0, 5.0, 1.3]]}])
    assert build_config(raw).users[0].waypoints is not None
    bad = _raw(users=[{"waypoints": [[1.0, 20.0, 5.0, 1.3], [0.5, 30.0, 5.0, 1.3]]}])
    assert "users[0].waypoints" in _errors(bad)


# ------------------------------------------------------------------ scenario


def _run(raw):
    cfg = build_config(raw)
    params = run_parameters(cfg)
    return cfg, params, list(run_scenario(cfg, params))


def test_round_count_and_completeness():
    cfg, params, recs = _run(_raw(duration=0.3))
    assert params.n_rounds == math.floor(0.3 * params.f_b) + 1 == 3
    keys = [(r.round, r.user, r.path) for r in recs]
    assert len(keys) == len(set(keys)) == params.n_rounds * len(cfg.users) * 4
    assert all(r.delta_omega >= 0 and r.k_hat >= 0 for r in recs)
    for (rnd, user) in {(r.round, r.user) for r in recs}:
        rows = [r for r in recs if r.round == rnd and r.user == user]
        assert sum(r.beam_target for r in rows) == (1 if rows[0].k_hat else 0)


def test_run_parameters_follow_planner():
    _, params, _ = _run(_raw())
    assert params.w_s == pytest.approx(8.8124e6, rel=1e-3)
    assert params.f_b == pytest.approx(8.0)
    assert params.sigma2 == pytest.approx(16 * 10 ** ((-174 + 6 - 30) / 10) * params.w_s, rel=1e-12)


def test_deterministic_csv():
    outs = []
    for _ in range(2):
        cfg, params, recs = _run(_raw())
        buf = io.StringIO()
        write_csv(recs, buf)
        outs.append(buf.getvalue())
    assert outs[0] == outs[1]
    lines = outs[0].splitlines()
    assert lines[0] == f"# schema: {SCHEMA}" and "runtime_ms" not in lines[1]
    buf = io.StringIO()
    write_csv(recs, buf, runtime=True)
    assert buf.getvalue().splitlines()[1].endswith("runtime_ms")


def test_static_los_user_high_snr():
    raw = _raw(duration=0.5)
    raw["scene"]["reflection_coefficient"] = 0.0
    raw["link"]["eirp_dbm"] = 60.0
    raw["protocol"]["v_max"] = 1.0
    raw["users"] = [{"position": [30.0, 10.0, 1.35], "velocity": [0.0, 0.0, 0.0]}]
    raw["protocol"]["f_b"] = 8.0
    _, params, recs = _run(raw)
    los = [r for r in recs if r.kind == "los"]
    assert len(los) == params.n_rounds
    assert all(r.delta_omega < 0.05 for r in los)


def test_summary_contents():
    cfg, params, recs = _run(_raw())
    s = summarize(recs, cfg.n_t, params)
    hist = k_hat_histogram(recs)
    assert sum(hist.values()) == params.n_rounds * len(cfg.users)
    assert s["k_hat_modes"] == k_hat_modes(hist)
    assert set(s["delta_omega"]) >= {"p50", "p90", "fraction_below_0.5"}
    assert set(s["loss_ideal_db"]) == {"p50", "p90"}
    assert k_hat_modes({3: 2, 4: 2, 2: 1}) == [3, 4]


# ------------------------------------------------------------------ CLI


def _cli(*argv):
    buf = io.StringIO()
    code = cli.main(list(argv), out=buf)
    return code, buf.getvalue()


def test_cli_plan():
    code, out = _cli("plan")
    rows = dict(line.split(",", 1) for line in out.strip().splitlines()[1:])
    assert code == 0 and int(rows["r_f"]) == 4
    assert float(rows["w_s_hz"]) == pytest.approx(8.8124e6, rel=1e-3)


def test_cli_bounds(capsys):
    code, out = _cli("bounds", "--snr-min", "0", "--snr-max", "10", "--step", "5", "--threshold")
    lines = out.strip().splitlines()
    assert code == 0 and lines[0] == "snr_db,crb,zzb" and len(lines) == 4
    assert float(lines[1].split(",")[1]) == pytest.approx(6 / 63)
    assert "16.04" in capsys.readouterr().err


def test_cli_isometry_and_reuse():
    code, out = _cli("isometry", "tx", "--n-1d", "8", "--m", "16,32", "--trials", "500", "--grid-oversampling", "2")
    assert code == 0 and out.splitlines()[0] == "m,min_db,max_db" and len(out.splitlines()) == 3
    code, out = _cli("isometry", "rx", "--l", "4,6", "--candidates", "50")
    assert code == 0 and len(out.splitlines()) == 3
    code, out = _cli("reuse", "--spacing", "50", "--r-f-max", "4")
    rows = [line.split(",") for line in out.strip().splitlines()[1:]]
    assert [int(r[4]) for r in rows] == [0, 0, 0, 1]


def test_cli_simulate(tmp_path):
    raw = yaml.safe_load(open(EXAMPLE))
    raw["duration"] = 0.125
    raw["users"] = raw["users"][:2]
    cfg_path = tmp_path / "s.yaml"
    cfg_path.write_text(yaml.safe_dump(raw))
    csv_path, sum_path = tmp_path / "m.csv", tmp_path / "s.json"
    code, out = _cli("simulate", "--config", str(cfg_path), "--seed", "3", "--csv", str(csv_path),
                     "--summary", str(sum_path))
    assert code == 0
    summary = json.loads(sum_path.read_text())
    assert summary["seed"] == 3 and summary["n_records"] == 2 * 2 * 4
    assert json.loads(out) == summary
    assert csv_path.read_text().startswith(f"# schema: {SCHEMA}")
    code, out = _cli("simulate", "--config", str(cfg_path), "--csv", "-", "--runtime")
    assert out.splitlines()[1].endswith("runtime_ms")


def test_cli_simulate_config_errors(tmp_path, capsys):
    raw = copy.deepcopy(default_config())
    raw["users"] = []
    path = tmp_path / "bad.yaml"
    path.write_text(yaml.safe_dump(raw))
    assert cli.main(["simulate", "--config", str(path)], out=io.StringIO()) == 2
    assert "config error: users:" in capsys.readouterr().err
    assert cli.main(["simulate", "--config", str(tmp_path / "missing.yaml")], out=io.StringIO()) == 2
