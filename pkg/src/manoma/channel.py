"""Multipath field-response channel model.

A user's uplink channel is a superposition of plane-wave transmit paths.
Moving the antenna inside its region changes only the per-path phases, so
the complex channel coefficient is a function of the 2-D antenna position.
All lengths are measured in carrier wavelengths (the physics depends only
on position/wavelength, so the wavelength is normalized to 1 throughout).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


class DegenerateChannelError(ValueError):
    """Channel carries no energy (all-zero path responses); gain is identically 0."""


@dataclass(frozen=True)
class PathAngles:
    """Departure direction of one transmit path, in radians.

    theta is the elevation angle and phi the azimuth angle, both in [0, pi].
    """

    theta: float
    phi: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.theta <= math.pi:
            raise ValueError(f"theta must lie in [0, pi], got {self.theta}")
        if not 0.0 <= self.phi <= math.pi:
            raise ValueError(f"phi must lie in [0, pi], got {self.phi}")


@dataclass(frozen=True)
class Position:
    """2-D antenna coordinate in wavelengths, relative to the region center."""

    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"position coordinates must be finite, got ({self.x}, {self.y})")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y])


ORIGIN = Position(0.0, 0.0)


@dataclass(frozen=True)
class MoveRegion:
    """Square feasible area [-side/2, side/2] x [-side/2, side/2] for one antenna."""

    side: float

    def __post_init__(self) -> None:
        if self.side < 0.0:
            raise ValueError(f"region side must be nonnegative, got {self.side}")

    @property
    def half(self) -> float:
        return 0.5 * self.side

    def contains(self, z: Position, tol: float = 1e-12) -> bool:
        return abs(z.x) <= self.half + tol and abs(z.y) <= self.half + tol

    def clamp(self, xy: np.ndarray) -> np.ndarray:
        """Coordinate-wise projection onto the square."""
        return np.clip(xy, -self.half, self.half)


@dataclass(frozen=True)
class UserChannel:
    """One user's multipath description: per-path departure angles and complex
    path responses, plus the user-to-receiver distance in meters.

    Immutable after construction; safe to share across parallel workers.
    """

    angles: tuple[PathAngles, ...]
    prv: np.ndarray
    distance: float = 1.0

    def __post_init__(self) -> None:
        prv = np.array(self.prv, dtype=complex)
        prv.setflags(write=False)
        object.__setattr__(self, "prv", prv)
        if len(self.angles) < 1:
            raise ValueError("a channel needs at least one path")
        if prv.ndim != 1 or len(prv) != len(self.angles):
            raise ValueError(
                f"angles ({len(self.angles)}) and path responses ({prv.shape}) must match"
            )
        if not self.distance > 0.0:
            raise ValueError(f"distance must be positive, got {self.distance}")
        # Direction cosines that map a position to per-path travel distances;
        # cached because every optimizer iteration re-evaluates the phases.
        theta = np.array([a.theta for a in self.angles])
        phi = np.array([a.phi for a in self.angles])
        object.__setattr__(self, "_dir_x", np.sin(theta) * np.cos(phi))
        object.__setattr__(self, "_dir_y", np.cos(theta))

    @property
    def num_paths(self) -> int:
        return len(self.angles)

    @property
    def direction_x(self) -> np.ndarray:
        """Per-path sin(theta)*cos(phi), the x-sensitivity of the path delay."""
        return self._dir_x

    @property
    def direction_y(self) -> np.ndarray:
        """Per-path cos(theta), the y-sensitivity of the path delay."""
        return self._dir_y

    @property
    def power(self) -> float:
        """Total path power, sum of |f_n|^2."""
        return float(np.sum(np.abs(self.prv) ** 2))

    @property
    def amplitude_sum(self) -> float:
        """Sum of per-path amplitudes |f_n|; its square caps the gain everywhere."""
        return float(np.sum(np.abs(self.prv)))

    def normalized(self) -> "UserChannel":
        """Same geometry with path responses rescaled to unit total power."""
        p = self.power
        if p <= 0.0:
            raise DegenerateChannelError("cannot normalize an all-zero channel")
        return UserChannel(self.angles, self.prv / math.sqrt(p), self.distance)


def propagation_delta(z: Position, p: PathAngles) -> float:
    """Extra travel distance of one path at position z versus the origin,
    in wavelengths: x*sin(theta)*cos(phi) + y*cos(theta)."""
    return z.x * math.sin(p.theta) * math.cos(p.phi) + z.y * math.cos(p.theta)


def field_response_vector(z: Position, ch: UserChannel) -> np.ndarray:
    """Unit-modulus phase vector over paths at position z.

    Entry p is exp(j*2*pi*rho_p(z)); at the origin it is the all-ones vector.
    """
    rho = z.x * ch.direction_x + z.y * ch.direction_y
    return np.exp(1j * TWO_PI * rho)


def channel_coefficient(z: Position, ch: UserChannel) -> complex:
    """Complex channel response: conjugated path responses dotted with the
    field-response vector at z."""
    return complex(np.vdot(ch.prv, field_response_vector(z, ch)))


def channel_gain(z: Position, ch: UserChannel) -> float:
    """Squared modulus of the channel coefficient at z."""
    h = channel_coefficient(z, ch)
    return h.real * h.real + h.imag * h.imag


def sample_user_channel(cfg, rng: np.random.Generator) -> UserChannel:
    """Draw one user's channel for a scenario.

    The distance is uniform over cfg.distance_range; departure angles are
    i.i.d. uniform on [0, pi]; each path response is circularly symmetric
    complex Gaussian with total variance distance**(-pathloss_exponent)
    divided evenly across the cfg.paths_per_user paths.

    The number and order of rng draws per call is fixed, so channels sampled
    sequentially from one stream do not depend on how many users follow.
    """
    d = float(rng.uniform(cfg.distance_range[0], cfg.distance_range[1]))
    num_paths = cfg.paths_per_user
    theta = rng.uniform(0.0, math.pi, num_paths)
    phi = rng.uniform(0.0, math.pi, num_paths)
    # CN(0, v) convention: real and imaginary parts i.i.d. N(0, v/2).
    scale = math.sqrt(d ** (-cfg.pathloss_exponent) / (2.0 * num_paths))
    prv = scale * (rng.standard_normal(num_paths) + 1j * rng.standard_normal(num_paths))
    angles = tuple(PathAngles(float(t), float(p)) for t, p in zip(theta, phi))
    return UserChannel(angles=angles, prv=prv, distance=d)
