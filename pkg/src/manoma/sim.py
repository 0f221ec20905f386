"""Monte Carlo comparison of movable-antenna and fixed-antenna access schemes.

Five schemes are evaluated on shared channel draws: NOMA with per-user
position optimization (NOMA-MA), NOMA with antennas fixed at the region
center (NOMA-FPA), orthogonal time sharing with both antenna variants
(OMA-MA, OMA-FPA), and an analytic sum-rate cap that assumes every path of
every user could be phase-aligned simultaneously (UPPER-BOUND).

Position optimization happens once per channel draw: transmit power never
enters the gain objective, so a power sweep reuses the same positions, and
user sweeps reuse each user's draw because every user gets an independent
child seed. That makes results a pure function of the config, regardless of
worker count or sweep shape.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from manoma.channel import MoveRegion, Position, UserChannel, channel_gain, sample_user_channel
from manoma.noma import RateRequirement, solve
from manoma.positioner import ScaParams, optimize_position

SCHEMES = ("NOMA-MA", "NOMA-FPA", "OMA-MA", "OMA-FPA", "UPPER-BOUND")

_MAX_SEED = 2**64


@dataclass(frozen=True)
class ScenarioConfig:
    """Scenario parameters; defaults match the reference setup.

    r_min applies to every user. The seed fully determines all draws.
    """

    num_users: int = 6
    paths_per_user: int = 5
    p_max_dbm: float = 10.0
    noise_dbm: float = -80.0
    pathloss_exponent: float = 3.9
    distance_range: tuple[float, float] = (80.0, 100.0)
    region_side: float = 2.0
    r_min: float = 0.25
    realizations: int = 1000
    seed: int = 0
    sca: ScaParams = field(default_factory=ScaParams)

    def __post_init__(self) -> None:
        if self.num_users < 1:
            raise ValueError(f"num_users must be at least 1, got {self.num_users}")
        if self.paths_per_user < 1:
            raise ValueError(f"paths_per_user must be at least 1, got {self.paths_per_user}")
        if not 0.0 < self.distance_range[0] <= self.distance_range[1]:
            raise ValueError(
                f"distance_range must satisfy 0 < min <= max, got {self.distance_range}"
            )
        if self.region_side < 0.0:
            raise ValueError(f"region_side must be nonnegative, got {self.region_side}")
        if self.r_min < 0.0:
            raise ValueError(f"r_min must be nonnegative, got {self.r_min}")
        if self.pathloss_exponent <= 0.0:
            raise ValueError(
                f"pathloss_exponent must be positive, got {self.pathloss_exponent}"
            )
        if self.realizations < 1:
            raise ValueError(f"realizations must be at least 1, got {self.realizations}")
        if not 0 <= self.seed < _MAX_SEED:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")


@dataclass(frozen=True)
class SchemeResult:
    """Aggregate of one scheme at one sweep point. Infeasible draws are
    excluded from mean and std; their share is reported, never hidden."""

    scheme: str
    mean_sum_rate: float
    std_sum_rate: float
    infeasible_count: int
    realizations: int

    @property
    def infeasible_fraction(self) -> float:
        return self.infeasible_count / self.realizations


@dataclass(frozen=True)
class SweepRow:
    """One (sweep value, scheme) cell of a sweep table."""

    sweep_value: float
    scheme: str
    mean_sum_rate: float
    std_sum_rate: float
    infeasible_fraction: float
    realizations: int


def dbm_to_mw(dbm: float) -> float:
    """Decibel-milliwatts to milliwatts."""
    return 10.0 ** (dbm / 10.0)


@dataclass(frozen=True)
class _UserDraw:
    """One user's channel with both antenna placements evaluated."""

    ma_gain: float
    fpa_gain: float
    amplitude_sum_sq: float
    position: Position
    distance: float


def _draw_user(cfg: ScenarioConfig, rng: np.random.Generator) -> _UserDraw:
    """Sample one channel and optimize its antenna position.

    The optimizer runs on the unit-power rescaling of the channel: its
    iterates are invariant to channel scale, but the absolute stop threshold
    is calibrated for order-one gains, and raw gains here carry the path
    loss (around 1e-8). The reported gains are evaluated on the raw channel.
    """
    ch = sample_user_channel(cfg, rng)
    region = MoveRegion(cfg.region_side)
    origin = Position(0.0, 0.0)
    pos, _, _ = optimize_position(ch.normalized(), region, cfg.sca, origin, rng=rng)
    return _UserDraw(
        ma_gain=channel_gain(pos, ch),
        fpa_gain=channel_gain(origin, ch),
        amplitude_sum_sq=ch.amplitude_sum**2,
        position=pos,
        distance=ch.distance,
    )


def _draw_users(cfg: ScenarioConfig, rng: np.random.Generator, count: int) -> list[_UserDraw]:
    """Draw `count` users, each from its own child stream of `rng`.

    Child streams make user k's draw independent of how many users follow,
    so a smaller user count is an exact prefix of a larger one.
    """
    return [_draw_user(cfg, child) for child in rng.spawn(count)]


def oma_sum_rate(gains, p_max: float, noise: float) -> float:
    """Orthogonal time sharing: each user transmits at full power during its
    1/K slot."""
    g = np.asarray(gains, dtype=float)
    if np.any(g < 0.0):
        raise ValueError("gains must be nonnegative")
    return float(np.mean(np.log2(1.0 + g * p_max / noise)))


def upper_bound(channels, p_max: float, noise: float) -> float:
    """Sum-rate cap with every user at the per-user maximum gain (all path
    amplitudes aligned) and full power; independent of antenna positions."""
    total = sum(ch.amplitude_sum**2 for ch in channels)
    return math.log2(1.0 + total * p_max / noise)


def _upper_bound_from_amp(amp_sq_total: float, p_max: float, noise: float) -> float:
    return math.log2(1.0 + amp_sq_total * p_max / noise)


def _scheme_rates(draws: list[_UserDraw], r_min: float, p_max: float, noise: float) -> np.ndarray:
    """Five scheme sum rates for one draw set; NaN marks an infeasible NOMA
    instance."""
    reqs = [RateRequirement(r_min)] * len(draws)
    ma_gains = np.array([d.ma_gain for d in draws])
    fpa_gains = np.array([d.fpa_gain for d in draws])
    out = np.empty(len(SCHEMES))
    for slot, gains in ((0, ma_gains), (1, fpa_gains)):
        sol = solve(gains, reqs, p_max, noise)
        out[slot] = sol.sum_rate if sol.feasible else math.nan
    out[2] = oma_sum_rate(ma_gains, p_max, noise)
    out[3] = oma_sum_rate(fpa_gains, p_max, noise)
    out[4] = _upper_bound_from_amp(sum(d.amplitude_sum_sq for d in draws), p_max, noise)
    return out


def run_realization(cfg: ScenarioConfig, rng: np.random.Generator) -> dict[str, float]:
    """Evaluate all schemes on one shared channel draw at cfg.p_max_dbm.

    Returns scheme label to sum rate in bps/Hz; NaN flags an infeasible NOMA
    draw (the minimum rates cannot all be met).
    """
    draws = _draw_users(cfg, rng, cfg.num_users)
    rates = _scheme_rates(draws, cfg.r_min, dbm_to_mw(cfg.p_max_dbm), dbm_to_mw(cfg.noise_dbm))
    return dict(zip(SCHEMES, rates))


def _realization_rng(cfg: ScenarioConfig, index: int) -> np.random.Generator:
    # Sub-seed derived from (seed, index) only: aggregation order and worker
    # scheduling cannot change any draw.
    return np.random.default_rng(np.random.SeedSequence((cfg.seed, index)))


def _realization_table(cfg: ScenarioConfig, sweep: str, values, index: int) -> np.ndarray:
    """Rates for one realization at every sweep point, shape (points, schemes)."""
    rng = _realization_rng(cfg, index)
    noise = dbm_to_mw(cfg.noise_dbm)
    if sweep == "power":
        draws = _draw_users(cfg, rng, cfg.num_users)
        return np.array(
            [_scheme_rates(draws, cfg.r_min, dbm_to_mw(p_dbm), noise) for p_dbm in values]
        )
    if sweep == "users":
        draws = _draw_users(cfg, rng, max(values))
        p_max = dbm_to_mw(cfg.p_max_dbm)
        return np.array(
            [_scheme_rates(draws[:k], cfg.r_min, p_max, noise) for k in values]
        )
    raise ValueError(f"unknown sweep axis {sweep!r}")


def _collect(cfg: ScenarioConfig, sweep: str, values, workers: int) -> np.ndarray:
    """All realizations' rate tables, shape (realizations, points, schemes)."""
    job = partial(_realization_table, cfg, sweep, tuple(values))
    indices = range(cfg.realizations)
    if workers <= 1:
        tables = [job(i) for i in indices]
    else:
        chunk = max(1, cfg.realizations // (workers * 4))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            tables = list(pool.map(job, indices, chunksize=chunk))
    return np.array(tables)


def _aggregate_point(samples: np.ndarray, scheme: str, realizations: int) -> SchemeResult:
    feasible = samples[~np.isnan(samples)]
    if len(feasible) == 0:
        mean = math.nan
        std = math.nan
    else:
        mean = float(np.mean(feasible))
        std = float(np.std(feasible, ddof=1)) if len(feasible) >= 2 else 0.0
    return SchemeResult(
        scheme=scheme,
        mean_sum_rate=mean,
        std_sum_rate=std,
        infeasible_count=realizations - len(feasible),
        realizations=realizations,
    )


def monte_carlo(cfg: ScenarioConfig, workers: int = 1) -> list[SchemeResult]:
    """Per-scheme mean and spread over cfg.realizations independent draws at
    the config's operating point."""
    tables = _collect(cfg, "power", [cfg.p_max_dbm], workers)
    return [
        _aggregate_point(tables[:, 0, s], scheme, cfg.realizations)
        for s, scheme in enumerate(SCHEMES)
    ]


def _sweep(cfg: ScenarioConfig, sweep: str, values, workers: int) -> list[SweepRow]:
    tables = _collect(cfg, sweep, values, workers)
    rows = []
    for i, value in enumerate(values):
        for s, scheme in enumerate(SCHEMES):
            agg = _aggregate_point(tables[:, i, s], scheme, cfg.realizations)
            rows.append(
                SweepRow(
                    sweep_value=float(value),
                    scheme=scheme,
                    mean_sum_rate=agg.mean_sum_rate,
                    std_sum_rate=agg.std_sum_rate,
                    infeasible_fraction=agg.infeasible_fraction,
                    realizations=cfg.realizations,
                )
            )
    return rows


def sweep_power(cfg: ScenarioConfig, p_max_dbm_values, workers: int = 1) -> list[SweepRow]:
    """Sum rates versus transmit power cap, all sweep points sharing the
    exact same channel draws and antenna positions (positions do not depend
    on power, so pairing is free variance reduction)."""
    values = [float(v) for v in p_max_dbm_values]
    if not values:
        raise ValueError("at least one power value is required")
    return _sweep(cfg, "power", values, workers)


def sweep_users(cfg: ScenarioConfig, k_values, workers: int = 1) -> list[SweepRow]:
    """Sum rates versus user count at the config's power cap; smaller user
    counts evaluate a prefix of the larger counts' draws."""
    values = [int(k) for k in k_values]
    if not values:
        raise ValueError("at least one user count is required")
    if min(values) < 1:
        raise ValueError(f"user counts must be at least 1, got {min(values)}")
    return _sweep(cfg, "users", values, workers)
