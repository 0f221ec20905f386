import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from manoma.channel import PathAngles, UserChannel
from manoma.noma import RateRequirement, solve
from manoma.positioner import ScaParams
from manoma.sim import (
    SCHEMES,
    ScenarioConfig,
    dbm_to_mw,
    monte_carlo,
    oma_sum_rate,
    run_realization,
    sweep_power,
    sweep_users,
    upper_bound,
    _realization_rng,
)


def _small_cfg(**kwargs):
    defaults = dict(
        num_users=3,
        paths_per_user=3,
        realizations=5,
        seed=7,
        sca=ScaParams(max_iterations=100),
    )
    defaults.update(kwargs)
    return ScenarioConfig(**defaults)


# --- unit conversion ---


@pytest.mark.parametrize("dbm,mw", [(0.0, 1.0), (-80.0, 1e-8), (10.0, 10.0)])
def test_dbm_to_mw(dbm, mw):
    assert_allclose(dbm_to_mw(dbm), mw, rtol=1e-12)


# --- config validation ---


@pytest.mark.parametrize(
    "bad",
    [
        dict(num_users=0),
        dict(paths_per_user=0),
        dict(distance_range=(100.0, 80.0)),
        dict(distance_range=(0.0, 80.0)),
        dict(region_side=-1.0),
        dict(r_min=-0.1),
        dict(realizations=0),
        dict(seed=-1),
        dict(pathloss_exponent=0.0),
    ],
)
def test_config_validation(bad):
    with pytest.raises(ValueError):
        ScenarioConfig(**bad)


# --- scheme formulas ---


def test_oma_single_user_is_plain_rate():
    assert_allclose(oma_sum_rate([2.0], 5.0, 1.0), math.log2(11.0), rtol=1e-12)


def test_oma_equal_gains_match_single_user_total():
    one = oma_sum_rate([0.5], 8.0, 1.0)
    two = oma_sum_rate([0.5, 0.5], 8.0, 1.0)
    assert_allclose(two, one, rtol=1e-12)


def test_oma_zero_gains_zero_rate():
    assert oma_sum_rate([0.0, 0.0], 10.0, 1.0) == 0.0
    with pytest.raises(ValueError):
        oma_sum_rate([-1.0], 10.0, 1.0)


def test_upper_bound_hand_value():
    ch = UserChannel(angles=(PathAngles(1.0, 1.0),), prv=np.array([1.0 + 0j]))
    assert_allclose(upper_bound([ch], p_max=1.0, noise=1.0), 1.0, rtol=1e-12)


def test_upper_bound_tight_for_single_path_channels():
    # With one path per user there is no phase misalignment to fix, so NOMA
    # with no rate constraints transmits at full power and meets the cap.
    rng = np.random.default_rng(60)
    channels = [
        UserChannel(
            angles=(PathAngles(rng.uniform(0, math.pi), rng.uniform(0, math.pi)),),
            prv=np.array([rng.standard_normal() + 1j * rng.standard_normal()]),
        )
        for _ in range(3)
    ]
    gains = [ch.power for ch in channels]
    reqs = [RateRequirement(0.0)] * 3
    sol = solve(gains, reqs, p_max=4.0, noise=1.0)
    assert sol.feasible
    assert_allclose(sol.sum_rate, upper_bound(channels, 4.0, 1.0), rtol=1e-9)


# --- single realizations ---


def test_realization_deterministic():
    cfg = _small_cfg()
    a = run_realization(cfg, _realization_rng(cfg, 0))
    b = run_realization(cfg, _realization_rng(cfg, 0))
    assert a == b


def test_point_region_collapses_ma_to_fpa():
    cfg = _small_cfg(region_side=0.0)
    rates = run_realization(cfg, _realization_rng(cfg, 1))
    assert rates["NOMA-MA"] == rates["NOMA-FPA"] or (
        math.isnan(rates["NOMA-MA"]) and math.isnan(rates["NOMA-FPA"])
    )
    assert rates["OMA-MA"] == rates["OMA-FPA"]


def test_single_path_collapses_ma_to_fpa():
    cfg = _small_cfg(paths_per_user=1)
    rates = run_realization(cfg, _realization_rng(cfg, 2))
    assert rates["OMA-MA"] == rates["OMA-FPA"]
    if not math.isnan(rates["NOMA-MA"]):
        assert rates["NOMA-MA"] == rates["NOMA-FPA"]


def test_per_realization_scheme_ordering():
    cfg = _small_cfg(num_users=4, realizations=1)
    checked_noma = 0
    for r in range(30):
        rates = run_realization(cfg, _realization_rng(cfg, r))
        bound = rates["UPPER-BOUND"]
        for scheme in SCHEMES[:4]:
            if not math.isnan(rates[scheme]):
                assert rates[scheme] <= bound + 1e-9
        assert rates["OMA-MA"] >= rates["OMA-FPA"] - 1e-9
        if not math.isnan(rates["NOMA-FPA"]):
            # Optimized positions only improve gains, so the movable variant
            # stays feasible and at least as good.
            assert not math.isnan(rates["NOMA-MA"])
            assert rates["NOMA-MA"] >= rates["NOMA-FPA"] - 1e-9
        if not math.isnan(rates["NOMA-MA"]):
            assert rates["NOMA-MA"] >= rates["OMA-MA"] - 1e-9
            checked_noma += 1
        if not math.isnan(rates["NOMA-FPA"]):
            assert rates["NOMA-FPA"] >= rates["OMA-FPA"] - 1e-9
    assert checked_noma >= 10


def test_gain_first_pipeline_beats_random_positions():
    # Decoupling check: optimizing each user's gain first is never worse
    # than any alternative position set with powers re-optimized.
    from manoma.channel import MoveRegion, Position, channel_gain, sample_user_channel
    from manoma.positioner import optimize_position

    cfg = _small_cfg(sca=ScaParams(multistart=8))
    region = MoveRegion(cfg.region_side)
    noise = dbm_to_mw(cfg.noise_dbm)
    p_max = dbm_to_mw(cfg.p_max_dbm)
    reqs = [RateRequirement(cfg.r_min)] * cfg.num_users
    compared = 0
    for r in range(10):
        rng = _realization_rng(cfg, r)
        channels = [sample_user_channel(cfg, child) for child in rng.spawn(cfg.num_users)]
        opt_gains = []
        for ch in channels:
            pos, _, _ = optimize_position(ch.normalized(), region, cfg.sca, rng=rng)
            opt_gains.append(channel_gain(pos, ch))
        pipeline = solve(opt_gains, reqs, p_max, noise)
        alt_rng = np.random.default_rng(1000 + r)
        for _ in range(5):
            alt_positions = [
                Position(*alt_rng.uniform(-region.half, region.half, 2)) for _ in channels
            ]
            alt_gains = [channel_gain(z, ch) for z, ch in zip(alt_positions, channels)]
            alt = solve(alt_gains, reqs, p_max, noise)
            if alt.feasible:
                assert pipeline.feasible
                assert pipeline.sum_rate >= alt.sum_rate - 1e-9
                compared += 1
    assert compared >= 20


# --- aggregation ---


def test_monte_carlo_single_realization_matches_run():
    cfg = _small_cfg(realizations=1)
    results = monte_carlo(cfg)
    single = run_realization(cfg, _realization_rng(cfg, 0))
    for res in results:
        if math.isnan(single[res.scheme]):
            assert res.infeasible_count == 1
            assert math.isnan(res.mean_sum_rate)
        else:
            assert_allclose(res.mean_sum_rate, single[res.scheme], rtol=1e-12)
            assert res.std_sum_rate == 0.0
        assert res.realizations == 1


def test_monte_carlo_worker_count_invariance():
    cfg = _small_cfg(num_users=2, paths_per_user=2, realizations=6)
    serial = monte_carlo(cfg, workers=1)
    parallel = monte_carlo(cfg, workers=3)
    assert serial == parallel


def test_infeasible_draws_excluded_from_mean():
    # Tight requirements at low power leave a mix of feasible and infeasible
    # draws; the mean must cover exactly the feasible ones.
    cfg = _small_cfg(num_users=4, r_min=1.0, p_max_dbm=5.0, realizations=40)
    results = {res.scheme: res for res in monte_carlo(cfg)}
    rates = [run_realization(cfg, _realization_rng(cfg, r))["NOMA-FPA"] for r in range(40)]
    feasible = [x for x in rates if not math.isnan(x)]
    res = results["NOMA-FPA"]
    assert res.infeasible_count == 40 - len(feasible)
    assert 0 < res.infeasible_count < 40
    assert_allclose(res.mean_sum_rate, np.mean(feasible), rtol=1e-12)
    assert_allclose(res.std_sum_rate, np.std(feasible, ddof=1), rtol=1e-12)
    assert 0.0 < res.infeasible_fraction < 1.0
    for scheme in ("OMA-MA", "OMA-FPA", "UPPER-BOUND"):
        assert results[scheme].infeasible_count == 0


# --- sweeps ---


def test_sweep_power_single_point_matches_monte_carlo():
    cfg = _small_cfg()
    rows = sweep_power(cfg, [cfg.p_max_dbm])
    results = monte_carlo(cfg)
    assert len(rows) == len(results)
    for row, res in zip(rows, results):
        assert row.scheme == res.scheme
        assert row.sweep_value == cfg.p_max_dbm
        for a, b in (
            (row.mean_sum_rate, res.mean_sum_rate),
            (row.std_sum_rate, res.std_sum_rate),
            (row.infeasible_fraction, res.infeasible_fraction),
        ):
            assert (math.isnan(a) and math.isnan(b)) or a == b


def test_sweep_power_shares_draws_across_points():
    cfg = _small_cfg(realizations=4)
    rows = sweep_power(cfg, [10.0, 10.0])
    first, second = rows[: len(SCHEMES)], rows[len(SCHEMES) :]
    assert first == second


def test_sweep_power_monotone_and_bounded():
    cfg = _small_cfg(num_users=2, realizations=8, r_min=0.1)
    rows = sweep_power(cfg, [0.0, 5.0, 10.0, 15.0])
    by_scheme = {}
    for row in rows:
        by_scheme.setdefault(row.scheme, []).append(row)
    for scheme, entries in by_scheme.items():
        means = [e.mean_sum_rate for e in entries if not math.isnan(e.mean_sum_rate)]
        assert all(b >= a - 1e-9 for a, b in zip(means, means[1:]))
    for i in range(4):
        point = rows[i * len(SCHEMES) : (i + 1) * len(SCHEMES)]
        bound = point[-1].mean_sum_rate
        for row in point[:-1]:
            if not math.isnan(row.mean_sum_rate):
                assert row.mean_sum_rate <= bound + 1e-9


def test_sweep_users_prefix_matches_direct_run():
    cfg = _small_cfg(num_users=4, realizations=4)
    rows = sweep_users(cfg, [2, 4])
    small = monte_carlo(ScenarioConfig(
        num_users=2,
        paths_per_user=cfg.paths_per_user,
        realizations=cfg.realizations,
        seed=cfg.seed,
        sca=cfg.sca,
    ))
    for row, res in zip(rows[: len(SCHEMES)], small):
        assert row.scheme == res.scheme
        a, b = row.mean_sum_rate, res.mean_sum_rate
        assert (math.isnan(a) and math.isnan(b)) or a == b


def test_sweep_users_single_user_noma_equals_oma():
    cfg = _small_cfg(r_min=0.0, realizations=6)
    rows = {row.scheme: row for row in sweep_users(cfg, [1])}
    assert_allclose(rows["NOMA-MA"].mean_sum_rate, rows["OMA-MA"].mean_sum_rate, rtol=1e-12)
    assert_allclose(rows["NOMA-FPA"].mean_sum_rate, rows["OMA-FPA"].mean_sum_rate, rtol=1e-12)


def test_sweep_input_validation():
    cfg = _small_cfg()
    with pytest.raises(ValueError):
        sweep_power(cfg, [])
    with pytest.raises(ValueError):
        sweep_users(cfg, [])
    with pytest.raises(ValueError):
        sweep_users(cfg, [0, 2])
