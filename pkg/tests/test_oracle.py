from dataclasses import replace

import numpy as np
import pytest

from Contracts.ContractOps import build_contract, cloud_profit, verify_all_constraints
from Contracts.Oracle import (
    OracleError,
    OracleSettings,
    coordinate_descent,
    grid_search,
    random_scheme,
    round_grid,
    scheme_profits,
    solve_state,
    static_scheme,
    static_state,
)
from Market.Sampler import SamplingRanges, sample_market

SMALL = OracleSettings(grid_points=9, sweeps=5)


def test_round_grid_bounds():
    grid = round_grid(0.0, 200.0, 5)
    np.testing.assert_allclose(grid, [0.0, 50.0, 100.0, 150.0, 200.0])


def test_round_grid_integer_mode_deduplicates():
    grid = round_grid(0.0, 3.0, 7, integer_rounds=True)
    np.testing.assert_array_equal(grid, [0.0, 1.0, 2.0, 3.0])


@pytest.mark.parametrize("t_min, t_max, points", [(10.0, 10.0, 5), (-1.0, 5.0, 5), (0.0, 5.0, 1)])
def test_round_grid_rejects_bad_input(t_min, t_max, points):
    with pytest.raises(OracleError):
        round_grid(t_min, t_max, points)


def test_settings_validation():
    with pytest.raises(OracleError):
        OracleSettings(mode="annealing")
    with pytest.raises(OracleError):
        OracleSettings(workers=0)


def test_single_type_matches_analytic_optimum(single_type_market):
    # dQ/dT = c/θ at T* ≈ 55.8 for α = 200, θ = 20
    result = grid_search(single_type_market, 40.0, 70.0, 61)
    assert result.contract.t1[0] == pytest.approx(55.8, abs=0.5)
    # β = 0 ties on the total are broken by the second-period profit
    assert result.contract.t2[0, 0] == pytest.approx(55.8, abs=0.5)


def test_single_type_coordinate_agrees_with_joint(single_type_market):
    joint = grid_search(single_type_market, 40.0, 70.0, 31, mode="joint")
    coord = grid_search(single_type_market, 40.0, 70.0, 31, mode="coordinate")
    assert coord.profit.total == pytest.approx(joint.profit.total)


def test_joint_dominates_coordinate_on_small_grid(market):
    joint = grid_search(market, 0.0, 200.0, 5, mode="joint")
    coord = grid_search(market, 0.0, 200.0, 5, mode="coordinate", sweeps=5)
    assert joint.profit.total >= coord.profit.total - 1e-9


def test_joint_guard_on_candidate_count(market):
    with pytest.raises(OracleError):
        grid_search(market, 0.0, 200.0, 64, mode="joint")


def test_parallel_joint_search_matches_serial(single_type_market):
    serial = grid_search(single_type_market, 0.0, 200.0, 21, mode="joint")
    parallel = grid_search(single_type_market, 0.0, 200.0, 21, mode="joint", workers=2)
    assert parallel.contract.rounds_key() == serial.contract.rounds_key()
    assert parallel.profit.total == serial.profit.total


def test_coordinate_descent_never_worse_than_start(market, worked_rounds):
    start = build_contract(*worked_rounds, market)
    grid = round_grid(0.0, 200.0, 9)
    result = coordinate_descent(market, worked_rounds, sweeps=3, grid=grid)
    assert result.profit.total >= cloud_profit(start, market).total


def test_solution_is_feasible(market):
    result = solve_state(market, SMALL)
    report = verify_all_constraints(result.contract, market.ladder, market.costs, market.beta)
    assert report.passed(), report.min_slack
    assert result.profit.total == pytest.approx(cloud_profit(result.contract, market).total)


def test_warm_start_is_used(market):
    cold = solve_state(market, SMALL)
    warm = solve_state(market, SMALL, init=[cold.contract])
    assert warm.profit.total >= cold.profit.total


def test_integer_rounds_solution(market):
    result = solve_state(market, OracleSettings(grid_points=9, sweeps=5, integer_rounds=True))
    assert np.all(result.contract.t1 == np.floor(result.contract.t1))
    assert np.all(result.contract.t2 == np.floor(result.contract.t2))


# ────────── baselines ────────────────────────────────────────────────
def test_static_scheme_is_oracle_without_future(market):
    assert static_state(market).beta == 0.0
    static = static_scheme(market, SMALL)
    direct = solve_state(static_state(market), SMALL).contract
    assert static.rounds_key() == direct.rounds_key()


def test_random_scheme_draws_from_grid(market):
    contract = random_scheme(market, np.random.default_rng(3), SMALL)
    grid = round_grid(SMALL.t_min, SMALL.t_max, SMALL.grid_points)
    assert np.isin(contract.t1, grid).all()
    report = verify_all_constraints(contract, market.ladder, market.costs, market.beta)
    assert report.passed()


def test_random_scheme_is_seeded(market):
    a = random_scheme(market, np.random.default_rng(7), SMALL)
    b = random_scheme(market, np.random.default_rng(7), SMALL)
    assert a.rounds_key() == b.rounds_key()


def test_scheme_profits_keys(market):
    profits = scheme_profits(market, np.random.default_rng(0), SMALL)
    assert set(profits) == {"dynamic", "static", "random"}
    assert all(np.isfinite(p.total) for p in profits.values())
    assert profits["static"].beta == 0.0


def test_default_grid_follows_settings(market, worked_rounds):
    defaults = OracleSettings()
    grid = round_grid(defaults.t_min, defaults.t_max, defaults.grid_points)
    implicit = coordinate_descent(market, worked_rounds, sweeps=1)
    explicit = coordinate_descent(market, worked_rounds, sweeps=1, grid=grid)
    assert implicit.contract.rounds_key() == explicit.contract.rounds_key()
    assert implicit.profit.total == explicit.profit.total


# ────────── scheme ordering / sweeps ─────────────────────────────────
def test_dynamic_beats_static_beats_random_on_average():
    rng = np.random.default_rng(11)
    totals = {"dynamic": [], "static": [], "random": []}
    for _ in range(20):
        state = sample_market(rng, SamplingRanges())
        for scheme, profit in scheme_profits(state, rng, SMALL).items():
            totals[scheme].append(profit.total)
    means = {scheme: np.mean(values) for scheme, values in totals.items()}
    assert means["dynamic"] > means["static"] > means["random"], means


def _swept_totals(base, field, values):
    totals, init = [], None
    for value in values:
        result = solve_state(replace(base, **{field: value}), SMALL, init=init)
        totals.append(result.profit.total)
        init = [result.contract]
    return np.array(totals)


@pytest.mark.parametrize("field, values", [
    ("n_servers", [3, 6, 12, 18]),
    ("alpha", [200.0, 250.0]),
    ("beta", [0.0, 0.5, 1.0]),
])
@pytest.mark.parametrize("seed", range(5))
def test_oracle_profit_grows_along_sweeps(field, values, seed):
    base = sample_market(np.random.default_rng(seed), SamplingRanges())
    totals = _swept_totals(base, field, values)
    assert np.all(np.diff(totals) >= -1e-9 * np.abs(totals).max()), totals
