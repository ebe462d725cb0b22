"""Scenario configuration: YAML loading and field-level validation.

All quantities are SI (metres, seconds, hertz, watts) except the ``*_db`` and
``*_dbm`` link fields.  A minimal file::

    seed: 0
    duration: 2.0
    users:
      - position: [25.0, 4.0, 1.3]
        velocity: [20.0, 0.0, 0.0]

Everything else falls back to :func:`default_config`.  ``protocol.w_s`` and
``protocol.f_b`` may be ``null``, in which case the planner derives them.
"""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field, fields
from pathlib import Path as FsPath

import numpy as np
import yaml

from ..estimator import EstimatorConfig
from ..geometry import ArrayConfig, CanyonScene, GeometryError, MobileState
from ..planner import LinkParams

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Invalid configuration; ``errors`` lists ``(field, message)`` pairs."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(f"{k}: {v}" for k, v in self.errors))


@dataclass(frozen=True)
class UserSpec:
    """A mobile following a straight line or a piecewise-linear waypoint track.

    ``waypoints`` rows are ``(t, x, y, z)`` with strictly increasing ``t``;
    positions are held constant outside the covered interval.
    """

    position: tuple = (30.0, 10.0, 1.35)
    velocity: tuple = (0.0, 0.0, 0.0)
    n_1d: int = 4
    azimuth_deg: float = 180.0
    elevation_deg: float = 0.0
    waypoints: tuple | None = None

    def position_at(self, t: float) -> np.ndarray:
        if self.waypoints:
            wp = np.asarray(self.waypoints, dtype=float)
            return np.array([np.interp(t, wp[:, 0], wp[:, i]) for i in (1, 2, 3)])
        return np.asarray(self.position, dtype=float) + t * np.asarray(self.velocity, dtype=float)

    def velocity_at(self, t: float) -> np.ndarray:
        if self.waypoints:
            wp = np.asarray(self.waypoints, dtype=float)
            i = int(np.clip(np.searchsorted(wp[:, 0], t, side="right") - 1, 0, len(wp) - 2))
            if not wp[0, 0] <= t <= wp[-1, 0]:
                return np.zeros(3)
            return (wp[i + 1, 1:] - wp[i, 1:]) / (wp[i + 1, 0] - wp[i, 0])
        return np.asarray(self.velocity, dtype=float)

    def max_speed(self) -> float:
        if self.waypoints:
            wp = np.asarray(self.waypoints, dtype=float)
            seg = np.linalg.norm(np.diff(wp[:, 1:], axis=0), axis=1) / np.diff(wp[:, 0])
            return float(seg.max(initial=0.0))
        return float(np.linalg.norm(self.velocity))

    def state(self, t: float, wavelength: float) -> MobileState:
        return MobileState(tuple(self.position_at(t)), tuple(self.velocity_at(t)),
                           ArrayConfig.half_wavelength(self.n_1d, wavelength), self.azimuth_deg, self.elevation_deg)


@dataclass(frozen=True)
class ProtocolSpec:
    m: int = 24
    l: int = 6
    w_s: float | None = None
    f_b: float | None = None
    v_max: float = 20.0
    r_min: float = 20.0
    rx_candidates: int = 1000
    rx_grid_oversampling: int = 4
    interference_w: float = 0.0


@dataclass(frozen=True)
class FeedbackSpec:
    mode: str = "full"
    rank: int = 2


@dataclass(frozen=True)
class OutputSpec:
    csv: str | None = None
    summary: str | None = None
    runtime: bool = False


@dataclass(frozen=True)
class ScenarioConfig:
    scene: CanyonScene = field(default_factory=CanyonScene)
    users: tuple = ()
    duration: float = 2.0
    link: LinkParams = field(default_factory=LinkParams)
    protocol: ProtocolSpec = field(default_factory=ProtocolSpec)
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    feedback: FeedbackSpec = field(default_factory=FeedbackSpec)
    output: OutputSpec = field(default_factory=OutputSpec)
    seed: int = 0

    @property
    def n_t(self) -> int:
        return self.scene.bs_array.n_1d


# Illustrative six-user desk scenario: speeds as in the usual canyon benchmark,
# start points chosen so every user stays 10-80 m down the street for 2 s.
DESK_USERS = (
    {"position": [25.0, 4.0, 1.30], "velocity": [20.0, 0.0, 0.0]},
    {"position": [40.0, 15.0, 1.35], "velocity": [-3.0, 0.0, 0.0]},
    {"position": [60.0, 9.0, 1.40], "velocity": [-15.0, 0.0, 0.0]},
    {"position": [18.0, 17.0, 1.30], "velocity": [1.2, -0.9, 0.0]},
    {"position": [50.0, 3.0, 1.35], "velocity": [2.1, 0.0, 0.0]},
    {"position": [30.0, 12.0, 1.40], "velocity": [10.0, 0.0, 0.0]},
)


def default_config() -> dict:
    """Raw (pre-validation) dictionary for the desk scenario with ``n_t = 8``."""
    return {
        "seed": 0,
        "duration": 2.0,
        "scene": {
            "street_width": 20.0,
            "bs_offset": 7.0,
            "bs_height": 6.0,
            "bs_x": 0.0,
            "tilt_azimuth_deg": 7.5,
            "tilt_elevation_deg": 7.5,
            "absorption_mu": 0.016,
            "reflection_coefficient": 0.3,
            "n_t": 8,
            "wavelength": 5e-3,
        },
        "link": {
            "eirp_dbm": 40.0,
            "noise_figure_db": 6.0,
            "comm_bandwidth": 2e9,
            "comm_margin_db": 10.0,
            "est_margin_db": 16.0,
            "design_snr_db": 7.0,
        },
        "protocol": {"m": 24, "l": 6, "w_s": None, "f_b": None, "v_max": 20.0, "r_min": 20.0,
                     "rx_candidates": 1000, "rx_grid_oversampling": 4, "interference_w": 0.0},
        "estimator": {},
        "feedback": {"mode": "full", "rank": 2},
        "users": copy.deepcopy(list(DESK_USERS)),
        "output": {"csv": None, "summary": None, "runtime": False},
    }


def _merge(base: dict, over: dict) -> dict:
    out = dict(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def _vec3(value, name: str, errors: list):
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        errors.append((name, "must be a list of three numbers"))
        return None
    if arr.shape != (3,) or not np.all(np.isfinite(arr)):
        errors.append((name, "must be a list of three finite numbers"))
        return None
    return tuple(float(x) for x in arr)


def _section(raw: dict, key: str, cls, errors: list, rename=None) -> object | None:
    data = dict(raw.get(key) or {})
    for old, new in (rename or {}).items():
        if old in data:
            data[new] = data.pop(old)
    known = {f.name for f in fields(cls)}
    for k in sorted(set(data) - known):
        errors.append((f"{key}.{k}", "unknown field"))
        data.pop(k)
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        errors.append((key, str(exc)))
        return None


def _user(i: int, raw, errors: list) -> UserSpec | None:
    name = f"users[{i}]"
    if not isinstance(raw, dict):
        errors.append((name, "must be a mapping"))
        return None
    unknown = set(raw) - {f.name for f in fields(UserSpec)}
    for k in sorted(unknown):
        errors.append((f"{name}.{k}", "unknown field"))
    n_1d = raw.get("n_1d", 4)
    if not isinstance(n_1d, int) or n_1d < 1:
        errors.append((f"{name}.n_1d", "must be a positive integer"))
        return None
    extra = {k: float(raw[k]) for k in ("azimuth_deg", "elevation_deg") if k in raw}
    if raw.get("waypoints") is not None:
        wp = np.asarray(raw["waypoints"], dtype=float)
        if wp.ndim != 2 or wp.shape[1] != 4 or len(wp) < 2:
            errors.append((f"{name}.waypoints", "need at least two rows of [t, x, y, z]"))
            return None
        if np.any(np.diff(wp[:, 0]) <= 0):
            errors.append((f"{name}.waypoints", "times must be strictly increasing"))
            return None
        return UserSpec(tuple(wp[0, 1:]), (0.0, 0.0, 0.0), n_1d, waypoints=tuple(map(tuple, wp)), **extra)
    pos = _vec3(raw.get("position"), f"{name}.position", errors)
    vel = _vec3(raw.get("velocity", [0.0, 0.0, 0.0]), f"{name}.velocity", errors)
    if pos is None or vel is None:
        return None
    return UserSpec(pos, vel, n_1d, **extra)


def build_config(raw: dict) -> ScenarioConfig:
    """Validate a raw mapping (merged over the defaults) into a :class:`ScenarioConfig`.

    Raises :class:`ConfigError` listing every offending field.
    """
    if not isinstance(raw, dict):
        raise ConfigError([("<root>", "config must be a mapping")])
    errors: list = []
    known = set(default_config())
    for k in sorted(set(raw) - known):
        errors.append((k, "unknown section"))
    merged = _merge(default_config(), {k: v for k, v in raw.items() if k in known})
    if "users" in raw:
        merged["users"] = raw["users"]

    seed = merged["seed"]
    if not isinstance(seed, int) or seed < 0:
        errors.append(("seed", "must be a non-negative integer"))
    duration = merged["duration"]
    if not isinstance(duration, (int, float)) or not duration > 0 or not math.isfinite(duration):
        errors.append(("duration", "must be a positive number of seconds"))

    sc = dict(merged["scene"])
    n_t = sc.pop("n_t", 8)
    wavelength = sc.pop("wavelength", 5e-3)
    scene = None
    if not isinstance(n_t, int) or n_t < 2:
        errors.append(("scene.n_t", "must be an integer >= 2"))
    elif not wavelength > 0:
        errors.append(("scene.wavelength", "must be positive"))
    else:
        unknown = set(sc) - {f.name for f in fields(CanyonScene)}
        for k in sorted(unknown):
            errors.append((f"scene.{k}", "unknown field"))
            sc.pop(k)
        try:
            scene = CanyonScene(bs_array=ArrayConfig.half_wavelength(n_t, wavelength), **sc)
        except (GeometryError, TypeError, ValueError) as exc:
            errors.append(("scene", str(exc)))

    link_raw = dict(merged["link"])
    link_raw.setdefault("n_t", n_t if isinstance(n_t, int) else 8)
    link_raw.setdefault("wavelength", wavelength)
    if scene is not None:
        link_raw.setdefault("mu", scene.absorption_mu)
    link = _section({"link": link_raw}, "link", LinkParams, errors)

    protocol = _section(merged, "protocol", ProtocolSpec, errors)
    if protocol is not None:
        for name in ("m", "l", "rx_candidates", "rx_grid_oversampling"):
            v = getattr(protocol, name)
            if not isinstance(v, int) or v < 1:
                errors.append((f"protocol.{name}", "must be a positive integer"))
        for name in ("w_s", "f_b"):
            v = getattr(protocol, name)
            if v is not None and not (isinstance(v, (int, float)) and v > 0):
                errors.append((f"protocol.{name}", "must be positive or null"))
        if protocol.interference_w < 0:
            errors.append(("protocol.interference_w", "must be non-negative"))

    estimator = _section(merged, "estimator", EstimatorConfig, errors)
    feedback = _section(merged, "feedback", FeedbackSpec, errors)
    if feedback is not None:
        if feedback.mode not in ("full", "svd"):
            errors.append(("feedback.mode", "must be 'full' or 'svd'"))
        elif protocol is not None and feedback.mode == "svd" and not 1 <= feedback.rank <= protocol.l:
            errors.append(("feedback.rank", f"must lie in [1, protocol.l={protocol.l}]"))
    output = _section(merged, "output", OutputSpec, errors)

    users_raw = merged["users"]
    users = []
    if not isinstance(users_raw, list) or not users_raw:
        errors.append(("users", "at least one user is required"))
    else:
        for i, u in enumerate(users_raw):
            spec = _user(i, u, errors)
            if spec is not None:
                users.append(spec)
    if scene is not None and not errors and isinstance(duration, (int, float)):
        for i, u in enumerate(users):
            for t in np.linspace(0.0, float(duration), 21):
                p = u.position_at(t)
                if not scene.contains(p) or np.linalg.norm(p - scene.bs_position) < 1.0:
                    errors.append((f"users[{i}]", f"leaves the canyon (or nears the basestation) at t={t:.3g} s"))
                    break

    if errors:
        raise ConfigError(errors)
    return ScenarioConfig(scene=scene, users=tuple(users), duration=float(duration), link=link,
                          protocol=protocol, estimator=estimator, feedback=feedback, output=output, seed=seed)


def load_config(path, overrides: dict | None = None) -> ScenarioConfig:
    """Read a YAML file and validate it; ``overrides`` are merged on top (e.g. ``{"seed": 3}``)."""
    text = FsPath(path).read_text()
    try:
        raw = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError([("<file>", f"not valid YAML: {exc}")]) from exc
    if overrides:
        raw = _merge(raw, overrides) if isinstance(raw, dict) else raw
    return build_config(raw)
