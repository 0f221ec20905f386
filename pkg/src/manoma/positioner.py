"""Per-user antenna placement by successive convex approximation.

The objective is the channel gain |h(z)|^2 over a square region. Each
iteration builds a concave quadratic minorant of the gain that is tight at
the current point: first the rank-one quadratic form is lower-bounded by a
linearization in the field-response vector, then the resulting sum of
cosines is lower-bounded by a second-order Taylor bound with a closed-form
curvature constant. The minorant maximizer over the box is a clamped Newton
point, so every step is exact and dependency-free, and the true gain never
decreases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from manoma.channel import (
    TWO_PI,
    DegenerateChannelError,
    MoveRegion,
    Position,
    UserChannel,
    channel_coefficient,
    channel_gain,
    field_response_vector,
)


@dataclass(frozen=True)
class ScaParams:
    """Stopping controls for the ascent loop.

    threshold is the absolute gain increase below which iteration stops;
    multistart adds that many extra uniform-random initial points and keeps
    the best run.
    """

    threshold: float = 1e-5
    max_iterations: int = 200
    multistart: int = 0

    def __post_init__(self) -> None:
        if self.threshold < 0.0:
            raise ValueError(f"threshold must be nonnegative, got {self.threshold}")
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be at least 1, got {self.max_iterations}")
        if self.multistart < 0:
            raise ValueError(f"multistart must be nonnegative, got {self.multistart}")


@dataclass(frozen=True)
class ScaState:
    """One accepted iterate: position, its true gain, and the step index."""

    current: Position
    gain: float
    iteration: int


def coupling_matrix(ch: UserChannel) -> np.ndarray:
    """Rank-one outer product of the path-response vector with itself.

    Hermitian and positive semidefinite; the gain is the quadratic form of
    this matrix in the field-response vector.
    """
    return np.outer(ch.prv, np.conj(ch.prv))


def anchor_vector(z_ref: Position, ch: UserChannel) -> np.ndarray:
    """Coupling matrix applied to the field response at the expansion point.

    The rank-one structure collapses the matrix-vector product to the path
    responses scaled by the channel coefficient, so this is O(paths).
    """
    return ch.prv * channel_coefficient(z_ref, ch)


def surrogate_value(z: Position, z_ref: Position, ch: UserChannel) -> float:
    """Linearized gain surrogate anchored at z_ref, evaluated at z.

    Equals Re{b^H g(z)} with b the anchor vector; at z = z_ref it recovers
    the true gain.
    """
    b = anchor_vector(z_ref, ch)
    return float(np.real(np.vdot(b, field_response_vector(z, ch))))


def _kappa(z: Position, b: np.ndarray, ch: UserChannel) -> np.ndarray:
    """Per-path phase of the surrogate cosine sum: path phase minus anchor phase."""
    rho = z.x * ch.direction_x + z.y * ch.direction_y
    return TWO_PI * rho - np.angle(b)


def surrogate_gradient(z_ref: Position, ch: UserChannel) -> np.ndarray:
    """Gradient of the linearized surrogate at its own expansion point."""
    b = anchor_vector(z_ref, ch)
    mag = np.abs(b)
    s = np.sin(_kappa(z_ref, b, ch))
    gx = -TWO_PI * float(np.sum(mag * ch.direction_x * s))
    gy = -TWO_PI * float(np.sum(mag * ch.direction_y * s))
    return np.array([gx, gy])


def lipschitz_delta(z_ref: Position, ch: UserChannel) -> float:
    """Curvature bound for the surrogate: 8*pi^2 times the anchor amplitudes.

    Dominates the surrogate Hessian everywhere (its spectral norm is at most
    half this value). Zero only when the anchor vanishes, which happens at an
    exact gain null; an all-zero path response has no optimization problem at
    all and is rejected.
    """
    if ch.power == 0.0:
        raise DegenerateChannelError("all-zero path responses: gain is identically zero")
    b = anchor_vector(z_ref, ch)
    return 8.0 * math.pi**2 * float(np.sum(np.abs(b)))


def quadratic_surrogate(z: Position, z_ref: Position, ch: UserChannel) -> float:
    """Concave quadratic minorant of the linearized surrogate, constant terms
    dropped: -(delta/2)||z||^2 + (grad + delta*z_ref)^T z."""
    grad = surrogate_gradient(z_ref, ch)
    delta = lipschitz_delta(z_ref, ch)
    zv = z.as_array()
    ref = z_ref.as_array()
    return float(-0.5 * delta * zv @ zv + (grad + delta * ref) @ zv)


def sca_step(z_ref: Position, ch: UserChannel, region: MoveRegion) -> Position:
    """Exact maximizer of the quadratic minorant over the box.

    The quadratic is separable, so the box-constrained maximum is the
    unconstrained Newton point clamped per coordinate. A vanishing curvature
    bound means the anchor is zero (gain null with a flat surrogate); the
    point is stationary and is returned unchanged.
    """
    delta = lipschitz_delta(z_ref, ch)
    if delta == 0.0:
        return z_ref
    grad = surrogate_gradient(z_ref, ch)
    target = region.clamp(z_ref.as_array() + grad / delta)
    return Position(float(target[0]), float(target[1]))


def sca_trajectory(
    ch: UserChannel,
    region: MoveRegion,
    params: ScaParams,
    init: Position,
) -> list[ScaState]:
    """Run the ascent loop from one initial point and record every iterate.

    The first state is the initial point itself; each later state is one
    surrogate maximization re-anchored at the previous point. Stops once the
    true gain improves by less than the threshold (the accepted step is still
    recorded) or the iteration cap is reached. The gain sequence is
    non-decreasing by construction.
    """
    if not region.contains(init):
        raise ValueError(f"initial position {init} lies outside the region")
    states = [ScaState(current=init, gain=channel_gain(init, ch), iteration=0)]
    for i in range(1, params.max_iterations + 1):
        prev = states[-1]
        z_new = sca_step(prev.current, ch, region)
        gain_new = channel_gain(z_new, ch)
        increase = gain_new - prev.gain
        if increase < 0.0:
            # Cannot happen mathematically; guards floating-point edge cases.
            break
        states.append(ScaState(current=z_new, gain=gain_new, iteration=i))
        if increase < params.threshold or increase == 0.0:
            break
    return states


def optimize_position(
    ch: UserChannel,
    region: MoveRegion,
    params: ScaParams = ScaParams(),
    init: Position = Position(0.0, 0.0),
    rng: np.random.Generator | None = None,
) -> tuple[Position, float, int]:
    """Maximize the channel gain over the region by iterated surrogate ascent.

    Returns the final position, its true gain, and the number of surrogate
    steps taken. With multistart > 0, reruns from that many extra uniform
    random points inside the region and keeps the highest-gain result (the
    supplied init always runs first and wins ties). The rng only feeds the
    multistart draws; omitting it gives a fixed seed so results stay
    reproducible.
    """
    starts = [init]
    if params.multistart > 0:
        if rng is None:
            rng = np.random.default_rng(0)
        half = region.half
        for _ in range(params.multistart):
            x, y = rng.uniform(-half, half, 2)
            starts.append(Position(float(x), float(y)))
    best: ScaState | None = None
    for start in starts:
        final = sca_trajectory(ch, region, params, start)[-1]
        if best is None or final.gain > best.gain:
            best = final
    return best.current, best.gain, best.iteration


def grid_oracle(
    ch: UserChannel, region: MoveRegion, step: float
) -> tuple[Position, float]:
    """Exhaustive gain search on an origin-anchored grid over the box.

    Grid ticks are integer multiples of `step` that fit in the box, with the
    two boundary coordinates always included; the origin is always a grid
    point. Ties go to the first point in row-major scan order.
    """
    if step <= 0.0:
        raise ValueError(f"grid step must be positive, got {step}")
    half = region.half
    if half == 0.0:
        ticks = np.array([0.0])
    else:
        n = int(math.floor(half / step + 1e-9))
        ticks = np.arange(-n, n + 1, dtype=float) * step
        if ticks[0] > -half + 1e-12 * max(half, 1.0):
            ticks = np.concatenate(([-half], ticks))
        if ticks[-1] < half - 1e-12 * max(half, 1.0):
            ticks = np.concatenate((ticks, [half]))
    xs, ys = np.meshgrid(ticks, ticks, indexing="ij")
    phase = xs[..., None] * ch.direction_x + ys[..., None] * ch.direction_y
    coeff = np.exp(1j * TWO_PI * phase) @ np.conj(ch.prv)
    gains = coeff.real**2 + coeff.imag**2
    i, j = np.unravel_index(int(np.argmax(gains)), gains.shape)
    return Position(float(xs[i, j]), float(ys[i, j])), float(gains[i, j])
