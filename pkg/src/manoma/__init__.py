"""Movable-antenna uplink NOMA toolkit.

Field-response channel modeling, per-user antenna placement via successive
convex approximation, closed-form decoding order and power control, and a
Monte Carlo harness comparing movable against fixed antennas and NOMA
against orthogonal access.
"""

from manoma.channel import (
    DegenerateChannelError,
    MoveRegion,
    PathAngles,
    Position,
    UserChannel,
    channel_coefficient,
    channel_gain,
    field_response_vector,
    propagation_delta,
    sample_user_channel,
)
from manoma.noma import (
    NomaSolution,
    RateRequirement,
    brute_force_allocation,
    check_feasibility,
    decoding_order,
    power_allocation,
    sinr_and_rates,
    solve,
)
from manoma.positioner import (
    ScaParams,
    ScaState,
    grid_oracle,
    optimize_position,
    sca_step,
    sca_trajectory,
)
from manoma.sim import (
    SCHEMES,
    ScenarioConfig,
    SchemeResult,
    SweepRow,
    dbm_to_mw,
    monte_carlo,
    oma_sum_rate,
    run_realization,
    sweep_power,
    sweep_users,
    upper_bound,
)

__version__ = "0.1.0"

__all__ = [
    "DegenerateChannelError",
    "MoveRegion",
    "PathAngles",
    "Position",
    "UserChannel",
    "channel_coefficient",
    "channel_gain",
    "field_response_vector",
    "propagation_delta",
    "sample_user_channel",
    "NomaSolution",
    "RateRequirement",
    "brute_force_allocation",
    "check_feasibility",
    "decoding_order",
    "power_allocation",
    "sinr_and_rates",
    "solve",
    "ScaParams",
    "ScaState",
    "grid_oracle",
    "optimize_position",
    "sca_step",
    "sca_trajectory",
    "SCHEMES",
    "ScenarioConfig",
    "SchemeResult",
    "SweepRow",
    "dbm_to_mw",
    "monte_carlo",
    "oma_sum_rate",
    "run_realization",
    "sweep_power",
    "sweep_users",
    "upper_bound",
    "__version__",
]
