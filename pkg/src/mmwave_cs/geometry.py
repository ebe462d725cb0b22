"""Array geometry, steering vectors and image-method ray tracing for an urban canyon.

World coordinates: ``x`` runs along the street, ``y`` across it (walls at
``y = 0`` and ``y = street_width``), ``z`` is height above the ground plane.

A planar array has a boresight (normal) and two in-plane axes.  The spatial
frequency of a direction ``k`` (unit vector pointing away from the array) is
``2*pi*(d/lambda) * (k . axis_x, k . axis_z)``.  Writing ``k`` in array-local
coordinates with inclination ``theta`` from boresight and azimuth ``phi`` in the
array plane gives the familiar ``sin(theta) cos(phi)`` / ``sin(theta) sin(phi)``
form used by :func:`direction_to_freq`.

Vectorization order for ``N x N`` arrays: element ``(m, n)`` (``m`` along
``axis_x``, ``n`` along ``axis_z``) sits at flat index ``m + n * N``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence, Union

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0


class GeometryError(ValueError):
    """Raised for degenerate or out-of-canyon geometry."""


class SpatialFrequency(NamedTuple):
    """2D spatial frequency in radians per element."""

    omega_x: float
    omega_z: float


@dataclass(frozen=True)
class ArrayConfig:
    n_1d: int
    spacing_d: float = 2.5e-3
    wavelength: float = 5e-3

    def __post_init__(self):
        if int(self.n_1d) != self.n_1d or self.n_1d < 1:
            raise ValueError(f"n_1d must be a positive integer, got {self.n_1d}")
        if self.spacing_d <= 0 or self.wavelength <= 0:
            raise ValueError("spacing_d and wavelength must be positive")

    @property
    def n_elements(self) -> int:
        return self.n_1d * self.n_1d

    @property
    def freq_scale(self) -> float:
        """``2*pi*d/lambda``: the largest admissible spatial frequency magnitude per axis."""
        return 2.0 * math.pi * self.spacing_d / self.wavelength

    @classmethod
    def half_wavelength(cls, n_1d: int, wavelength: float = 5e-3) -> "ArrayConfig":
        return cls(n_1d=n_1d, spacing_d=wavelength / 2.0, wavelength=wavelength)


ArrayLike = Union[ArrayConfig, int]


def _side(array: ArrayLike) -> int:
    return array.n_1d if isinstance(array, ArrayConfig) else int(array)


def steering_matrix(array: ArrayLike, omegas) -> np.ndarray:
    """Steering vectors for many frequencies at once.

    ``omegas`` has shape ``(K, 2)`` (or ``(2,)``); the result has shape
    ``(N**2, K)`` with columns ``x(N, omega_k)``.
    """
    n = _side(array)
    om = np.atleast_2d(np.asarray(omegas, dtype=float))
    idx = np.arange(n)
    ex = np.exp(1j * np.outer(idx, om[:, 0]))  # (n, K) varies with m
    ez = np.exp(1j * np.outer(idx, om[:, 1]))  # (n, K) varies with n
    # flat index m + n*N -> ez[n] * ex[m]
    return (ez[:, None, :] * ex[None, :, :]).reshape(n * n, om.shape[0])


def steering_vector(array: ArrayLike, omega) -> np.ndarray:
    """Response ``x(N, omega)`` of an ``N x N`` array, entries ``exp(j(w_x m + w_z n))``."""
    return steering_matrix(array, omega)[:, 0]


def direction_to_freq(array: ArrayConfig, theta: float, phi: float) -> SpatialFrequency:
    """Map inclination ``theta`` (from boresight) and in-plane azimuth ``phi`` to a spatial frequency."""
    s = array.freq_scale * math.sin(theta)
    return SpatialFrequency(s * math.cos(phi), s * math.sin(phi))


def wrap_angle(omega):
    """Wrap to ``[-pi, pi)``; steering vectors are 2*pi periodic in each component."""
    return (np.asarray(omega, dtype=float) + np.pi) % (2.0 * np.pi) - np.pi


# --------------------------------------------------------------------------- frames


@dataclass(frozen=True)
class ArrayFrame:
    """Orientation of a planar array: boresight plus the two in-plane axes."""

    boresight: tuple
    axis_x: tuple
    axis_z: tuple

    @classmethod
    def from_angles(cls, azimuth_deg: float = 0.0, elevation_deg: float = 0.0) -> "ArrayFrame":
        """Boresight at ``azimuth_deg`` from world +x (toward +y) and tilted down by ``elevation_deg``."""
        az = math.radians(azimuth_deg)
        el = math.radians(elevation_deg)
        n = (math.cos(el) * math.cos(az), math.cos(el) * math.sin(az), -math.sin(el))
        u = (-math.sin(az), math.cos(az), 0.0)
        w = (math.sin(el) * math.cos(az), math.sin(el) * math.sin(az), math.cos(el))
        return cls(n, u, w)

    def frequency(self, array: ArrayConfig, direction) -> SpatialFrequency:
        k = np.asarray(direction, dtype=float)
        k = k / np.linalg.norm(k)
        s = array.freq_scale
        return SpatialFrequency(s * float(k @ self.axis_x), s * float(k @ self.axis_z))


# --------------------------------------------------------------------------- scene


@dataclass(frozen=True)
class Path:
    """One propagation ray: complex voltage gain, departure/arrival frequencies and length."""

    gain: complex
    omega_t: SpatialFrequency
    omega_r: SpatialFrequency
    length: float
    kind: str = "los"

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError(f"path length must be positive, got {self.length}")
        if not np.isfinite(abs(self.gain)):
            raise ValueError("path gain must be finite")

    @property
    def delay(self) -> float:
        return self.length / SPEED_OF_LIGHT


@dataclass(frozen=True)
class CanyonScene:
    """Straight street between two vertical walls, basestation on one side.

    ``bs_offset`` is the basestation's distance from the wall at ``y = 0``.
    Tilt angles follow :meth:`ArrayFrame.from_angles`.
    """

    street_width: float = 20.0
    bs_offset: float = 7.0
    bs_height: float = 6.0
    bs_x: float = 0.0
    tilt_azimuth_deg: float = 7.5
    tilt_elevation_deg: float = 7.5
    absorption_mu: float = 0.016
    reflection_coefficient: float = 0.3
    bs_array: ArrayConfig = field(default_factory=lambda: ArrayConfig.half_wavelength(8))

    def __post_init__(self):
        if self.street_width <= 0:
            raise GeometryError("street_width must be positive")
        if not 0 < self.bs_offset < self.street_width or self.bs_height <= 0:
            raise GeometryError("basestation must lie inside the canyon")
        if self.absorption_mu < 0:
            raise GeometryError("absorption_mu must be non-negative")
        if not (math.isfinite(self.tilt_azimuth_deg) and math.isfinite(self.tilt_elevation_deg)):
            raise GeometryError("tilt angles must be finite")

    @property
    def bs_position(self) -> np.ndarray:
        return np.array([self.bs_x, self.bs_offset, self.bs_height])

    @property
    def bs_frame(self) -> ArrayFrame:
        return ArrayFrame.from_angles(self.tilt_azimuth_deg, self.tilt_elevation_deg)

    @property
    def wavelength(self) -> float:
        return self.bs_array.wavelength

    def contains(self, point) -> bool:
        p = np.asarray(point, dtype=float)
        return bool(0.0 < p[1] < self.street_width and p[2] > 0.0)


@dataclass(frozen=True)
class MobileState:
    position: tuple
    velocity: tuple = (0.0, 0.0, 0.0)
    array: ArrayConfig = field(default_factory=lambda: ArrayConfig.half_wavelength(4))
    azimuth_deg: float = 180.0
    elevation_deg: float = 0.0

    @property
    def frame(self) -> ArrayFrame:
        return ArrayFrame.from_angles(self.azimuth_deg, -self.elevation_deg)

    @property
    def speed(self) -> float:
        return float(np.linalg.norm(self.velocity))

    def advanced(self, dt: float) -> "MobileState":
        p = np.asarray(self.position, dtype=float) + dt * np.asarray(self.velocity, dtype=float)
        return MobileState(tuple(p), self.velocity, self.array, self.azimuth_deg, self.elevation_deg)


_MIRRORS = {
    "los": np.ones(3),
    "ground": np.array([1.0, 1.0, -1.0]),
    "wall_0": np.array([1.0, -1.0, 1.0]),
    "wall_1": np.array([1.0, -1.0, 1.0]),
}


def image_sources(scene: CanyonScene) -> list[tuple[str, np.ndarray, int]]:
    """The basestation and its single-bounce mirror images (kind, position, bounces)."""
    bs = scene.bs_position
    ground = bs * np.array([1.0, 1.0, -1.0])
    wall_0 = bs * np.array([1.0, -1.0, 1.0])
    wall_1 = np.array([bs[0], 2.0 * scene.street_width - bs[1], bs[2]])
    return [("los", bs, 0), ("ground", ground, 1), ("wall_0", wall_0, 1), ("wall_1", wall_1, 1)]


def reflection_point(scene: CanyonScene, kind: str, mobile_pos) -> np.ndarray | None:
    """Where the ``kind`` ray meets its reflecting plane (``None`` for LoS)."""
    if kind == "los":
        return None
    images = {k: p for k, p, _ in image_sources(scene)}
    img = images[kind]
    m = np.asarray(mobile_pos, dtype=float)
    axis, plane = {"ground": (2, 0.0), "wall_0": (1, 0.0), "wall_1": (1, scene.street_width)}[kind]
    t = (plane - img[axis]) / (m[axis] - img[axis])
    return img + t * (m - img)


def trace_paths(scene: CanyonScene, mobile: MobileState) -> list[Path]:
    """LoS plus ground and both wall reflections via the image method; LoS first.

    Multiple bounces are ignored.  Each reflection multiplies the amplitude by
    ``scene.reflection_coefficient``; free-space loss and oxygen absorption use
    the full unfolded path length.
    """
    from .channel import path_gain_db

    m = np.asarray(mobile.position, dtype=float)
    if not scene.contains(m):
        raise GeometryError(f"mobile at {tuple(m)} is outside the canyon")
    bs = scene.bs_position
    if np.linalg.norm(m - bs) < 1e-9:
        raise GeometryError("mobile coincides with the basestation")

    lam = scene.wavelength
    tx_frame = scene.bs_frame
    rx_frame = mobile.frame
    paths = []
    for kind, img, bounces in image_sources(scene):
        rel = m - img
        length = float(np.linalg.norm(rel))
        if length < 1e-9:
            raise GeometryError("mobile coincides with an image source")
        arrival_dir = -rel / length  # from mobile back toward the (image) source
        # leaving the real basestation the ray is the mirror image of ``rel``
        departure_dir = (rel / length) * _MIRRORS[kind]
        amp = 10.0 ** (path_gain_db(length, scene.absorption_mu, lam) / 20.0)
        amp *= scene.reflection_coefficient ** bounces
        gain = amp * np.exp(-2j * np.pi * length / lam)
        paths.append(
            Path(
                gain=complex(gain),
                omega_t=tx_frame.frequency(scene.bs_array, departure_dir),
                omega_r=rx_frame.frequency(mobile.array, arrival_dir),
                length=length,
                kind=kind,
            )
        )
    return paths


def frequencies_of(paths: Sequence[Path], side: str = "t") -> np.ndarray:
    attr = "omega_t" if side == "t" else "omega_r"
    return np.array([tuple(getattr(p, attr)) for p in paths], dtype=float).reshape(-1, 2)
