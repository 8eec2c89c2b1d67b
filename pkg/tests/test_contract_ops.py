from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from Contracts.ContractOps import (
    admissible_rounds,
    build_contract,
    check_feasible_contract,
    check_feasible_p1,
    check_feasible_p2,
    cloud_profit,
    es_expected_utility,
    optimal_rewards_p1,
    optimal_rewards_p2,
    period2_rents,
    rent_shift,
    verify_all_constraints,
)
from Contracts.ContractTypes import ContractError, MarketState, TwoPeriodContract, TypeLadder
from Economics.EconModel import EdgeProfile, QualityHyper, cost_coeffs, model_quality
from Market.Sampler import SamplingRanges, dominance_sorted, sample_market


# ────────── closed form ──────────────────────────────────────────────
def test_period2_rewards_worked_instance(ladder, costs):
    r2 = optimal_rewards_p2([10.0, 20.0], ladder.theta2, costs)
    np.testing.assert_allclose(r2, [17.7429, 30.0309], atol=1e-4)


def test_period1_rewards_worked_instance(ladder, costs, worked_rounds):
    t1, t2 = worked_rounds
    r1 = optimal_rewards_p1(t1, t2, ladder, costs, beta=0.5)
    np.testing.assert_allclose(r1, [17.7429, 29.7852], atol=1e-4)


def test_period1_without_future_matches_period2_form(ladder, costs, worked_rounds):
    t1, t2 = worked_rounds
    r1 = optimal_rewards_p1(t1, t2, ladder, costs, beta=0.0)
    np.testing.assert_allclose(r1, optimal_rewards_p2(t1, ladder.theta1, costs))


def test_rewards_reject_decreasing_rounds(ladder, costs):
    with pytest.raises(ContractError):
        optimal_rewards_p2([20.0, 10.0], ladder.theta2, costs)


def test_rewards_reject_length_mismatch(ladder, costs):
    with pytest.raises(ContractError):
        optimal_rewards_p2([1.0, 2.0, 3.0], ladder.theta2, costs)


def test_rent_shift_first_entry_is_zero(ladder, costs):
    phi = rent_shift([10.0, 20.0], [12.0, 22.0], ladder.theta2, costs.c)
    assert phi[0] == 0.0
    assert phi[1] == pytest.approx(-16.384)


def test_binding_constraints_of_period2(ladder, costs):
    t = np.array([10.0, 20.0])
    r = optimal_rewards_p2(t, ladder.theta2, costs)
    rents = period2_rents(t, r, ladder.theta2, costs)
    assert rents[0] == pytest.approx(0.0, abs=1e-9)
    report = check_feasible_p2(t, r, ladder.theta2, costs)
    assert report.passed, report.violations


def test_zero_rounds_row_pays_fixed_cost_only(ladder, costs):
    r = optimal_rewards_p2([0.0, 0.0], ladder.theta2, costs)
    np.testing.assert_allclose(r, [costs.e_fixed / 15.0] * 2)


# ────────── utilities & profit ───────────────────────────────────────
def test_es_expected_utility_worked_instance(market, worked_rounds):
    contract = build_contract(*worked_rounds, market)
    value = es_expected_utility(1, contract, market.ladder, market.costs, market.beta)
    assert value == pytest.approx(115.33, abs=0.01)
    lowest = es_expected_utility(0, contract, market.ladder, market.costs, market.beta)
    assert lowest == pytest.approx(0.0, abs=1e-8)


def test_es_expected_utility_index_range(market, worked_rounds):
    contract = build_contract(*worked_rounds, market)
    with pytest.raises(IndexError):
        es_expected_utility(2, contract, market.ladder, market.costs, market.beta)


def test_cloud_profit_by_hand(market, worked_rounds):
    contract = build_contract(*worked_rounds, market)
    profit = cloud_profit(contract, market)
    q = lambda t: model_quality(np.asarray(t), market.hyper)  # noqa: E731
    gain1 = 200.0 * q(contract.t1) - contract.r1
    u1 = 3 * 0.5 * gain1.sum() - 0.5 * 20.0
    gain2 = 200.0 * q(contract.t2) - contract.r2
    u2 = 3 * (0.5 * (0.6 * gain2[0, 0] + 0.4 * gain2[0, 1])
              + 0.5 * (0.4 * gain2[1, 0] + 0.6 * gain2[1, 1])) - 0.5 * 20.0
    assert profit.u1 == pytest.approx(u1)
    assert profit.u2 == pytest.approx(u2)
    assert profit.total == pytest.approx(u1 + 0.5 * u2)


# ────────── admissible rounds ────────────────────────────────────────
def test_admissible_rounds_keeps_valid_rounds(ladder, costs, worked_rounds):
    t1, t2 = admissible_rounds(*worked_rounds, ladder, costs, 0.5)
    np.testing.assert_array_equal(t1, worked_rounds[0])
    np.testing.assert_array_equal(t2, worked_rounds[1])


def test_admissible_rounds_sorts_and_orders_rows(ladder, costs):
    t1, t2 = admissible_rounds([30.0, 5.0], [[50.0, 40.0], [10.0, 20.0]], ladder, costs, 0.5)
    assert list(t1) == [5.0, 30.0]
    assert np.all(np.diff(t2, axis=1) >= 0)
    assert np.all(np.diff(t2, axis=0) >= 0)


def test_admissible_rounds_damps_large_row_steps(ladder, costs):
    # equal first-period rounds leave no budget for a higher second-period row
    t1, t2 = admissible_rounds([10.0, 10.0], [[0.0, 0.0], [100.0, 200.0]], ladder, costs, 1.0)
    np.testing.assert_array_equal(t2[1], t2[0])


def test_admissible_rounds_integer_mode(ladder, costs):
    t1, t2 = admissible_rounds([10.7, 20.2], [[1.5, 2.5], [3.9, 4.1]], ladder, costs, 0.0,
                               integer_rounds=True)
    np.testing.assert_array_equal(t1, [10.0, 20.0])
    np.testing.assert_array_equal(t2, [[1.0, 2.0], [3.0, 4.0]])


def test_admissible_rounds_reject_negative(ladder, costs):
    with pytest.raises(ContractError):
        admissible_rounds([-1.0, 2.0], np.zeros((2, 2)), ladder, costs, 0.5)


# ────────── feasibility ──────────────────────────────────────────────
def test_worked_contract_is_feasible(market, worked_rounds):
    contract = build_contract(*worked_rounds, market)
    assert check_feasible_contract(contract, market.ladder, market.costs, 0.5).passed
    report = verify_all_constraints(contract, market.ladder, market.costs, 0.5)
    assert report.passed(), report.min_slack
    assert report.residuals["ir1_type1"] == pytest.approx(0.0, abs=1e-8)


def test_iic_violation_detected(market, worked_rounds):
    contract = build_contract(*worked_rounds, market)
    cheap = TwoPeriodContract(t1=contract.t1, r1=contract.r1 - np.array([0.0, 5.0]),
                              t2=contract.t2, r2=contract.r2)
    report = check_feasible_p1(cheap, market.ladder, market.costs, 0.5)
    assert "iic_binding" in report.violations
    assert not verify_all_constraints(cheap, market.ladder, market.costs, 0.5).passed()


def test_cross_period_order_only_with_future(market):
    contract = build_contract([10.0, 20.0], [[10.0, 20.0], [10.0, 20.0]], market)
    swapped = TwoPeriodContract(t1=contract.t1, r1=contract.r1,
                                t2=contract.t2[::-1] + np.array([[0.0, 0.0], [-5.0, -5.0]]),
                                r2=contract.r2)
    with_future = check_feasible_p1(swapped, market.ladder, market.costs, 0.5)
    no_future = check_feasible_p1(swapped, market.ladder, market.costs, 0.0)
    assert "cross_period_order" in with_future.violations
    assert "cross_period_order" not in no_future.violations


_THETA = st.lists(st.floats(10.0, 30.0), min_size=1, max_size=3, unique=True).map(sorted)
BETAS = (0.0, 0.5, 1.0)


@st.composite
def _markets(draw):
    theta1 = draw(_THETA)
    k = len(theta1)
    theta2 = draw(st.lists(st.floats(10.0, 30.0), min_size=k, max_size=k, unique=True).map(sorted))
    weights = st.lists(st.floats(0.1, 1.0), min_size=k, max_size=k)
    p1 = np.array(draw(weights))
    rows = np.array([draw(weights) for _ in range(k)])
    p2 = dominance_sorted(rows / rows.sum(axis=1, keepdims=True))
    ladder = TypeLadder(theta1=theta1, theta2=theta2, p1=p1 / p1.sum(), p2=p2)
    beta = draw(st.sampled_from(BETAS))
    return MarketState(n_servers=3, ladder=ladder, profile=EdgeProfile(), hyper=QualityHyper(),
                       alpha=200.0, beta=beta, e_cloud=20.0)


@settings(max_examples=40, deadline=None)
@given(_markets(), st.data())
def test_closed_form_contract_always_feasible(market, data):
    k = market.k_types
    rounds = st.floats(0.0, 200.0)
    t1 = data.draw(st.lists(rounds, min_size=k, max_size=k))
    t2 = data.draw(st.lists(st.lists(rounds, min_size=k, max_size=k), min_size=k, max_size=k))
    contract = build_contract(t1, t2, market)
    report = verify_all_constraints(contract, market.ladder, market.costs, market.beta)
    assert report.passed(), report.min_slack
    assert np.all(np.diff(contract.r1) >= -1e-9 * max(1.0, np.abs(contract.r1).max()))


def _random_contract(rng: np.random.Generator, market: MarketState) -> TwoPeriodContract:
    k = market.k_types
    return build_contract(rng.uniform(0.0, 200.0, k), rng.uniform(0.0, 200.0, (k, k)), market)


@pytest.mark.parametrize("k", [2, 3, 5])
def test_sampled_markets_give_feasible_binding_contracts(k):
    rng = np.random.default_rng(k)
    for i in range(400):
        market = sample_market(rng, SamplingRanges(k_types=k, beta=BETAS[i % 3]))
        contract = _random_contract(rng, market)
        report = verify_all_constraints(contract, market.ladder, market.costs, market.beta)
        tol = 1e-9 * report.scale
        assert report.passed(), (i, report.min_slack)
        assert report.residuals["ir1_type1"] <= tol, i
        assert report.residuals["ir2_type1"] <= tol, i
        assert report.residuals["ic2_adjacent"] <= tol, i
        assert report.residuals["iic_adjacent"] <= tol, i


def _scaled_reward(contract: TwoPeriodContract, rng: np.random.Generator) -> TwoPeriodContract:
    r1, r2 = contract.r1.copy(), contract.r2.copy()
    block = r1 if rng.random() < 0.5 else r2.reshape(-1)
    block[rng.integers(block.size)] *= rng.uniform(0.8, 1.2)
    return TwoPeriodContract(t1=contract.t1, r1=r1, t2=contract.t2, r2=r2)


def test_reduced_checks_agree_with_full_enumeration():
    rng = np.random.default_rng(2024)
    full_failures = 0
    for i in range(10_000):
        k = (2, 3, 5)[i % 3]
        market = sample_market(rng, SamplingRanges(k_types=k, beta=BETAS[(i // 3) % 3]))
        contract = _random_contract(rng, market)
        if rng.random() < 0.2:
            contract = _scaled_reward(contract, rng)
        reduced = check_feasible_contract(contract, market.ladder, market.costs, market.beta)
        full = verify_all_constraints(contract, market.ladder, market.costs, market.beta)
        if reduced.passed:
            assert full.passed(), (i, full.min_slack)
        if not full.passed():
            assert reduced.violations, i
            full_failures += 1
    assert full_failures > 0


def test_swapped_rewards_break_incentive_compatibility(market, worked_rounds):
    contract = build_contract(*worked_rounds, market)
    r2 = contract.r2.copy()
    r2[0] = r2[0, ::-1]
    # fewer rounds for more reward in row 0
    swapped = TwoPeriodContract(t1=contract.t1, r1=contract.r1, t2=contract.t2, r2=r2)
    assert swapped.t2[0, 0] < swapped.t2[0, 1] and swapped.r2[0, 0] > swapped.r2[0, 1]
    full = verify_all_constraints(swapped, market.ladder, market.costs, 0.5)
    assert full.min_slack["ic2"] < 0
    row = check_feasible_p2(swapped.t2[0], swapped.r2[0], market.ladder.theta2, market.costs)
    assert "monotone_rewards" in row.violations
    assert "row0:monotone_rewards" in check_feasible_contract(
        swapped, market.ladder, market.costs, 0.5).violations


def test_lowered_reward_breaks_participation(market, worked_rounds):
    contract = build_contract(*worked_rounds, market)
    r2 = contract.r2.copy()
    r2[1, 0] -= 1.0
    lowered = TwoPeriodContract(t1=contract.t1, r1=contract.r1, t2=contract.t2, r2=r2)
    full = verify_all_constraints(lowered, market.ladder, market.costs, 0.5)
    assert full.min_slack["ir2"] == pytest.approx(-market.ladder.theta2[0])
    row = check_feasible_p2(lowered.t2[1], lowered.r2[1], market.ladder.theta2, market.costs)
    assert "ir_binding" in row.violations


@pytest.mark.parametrize("name", ["t1", "r1", "t2", "r2"])
def test_contract_rejects_negative_entries(market, worked_rounds, name):
    contract = build_contract(*worked_rounds, market)
    blocks = {key: getattr(contract, key).copy() for key in ("t1", "r1", "t2", "r2")}
    blocks[name].flat[0] = -1.0
    with pytest.raises(ContractError, match=name):
        TwoPeriodContract(**blocks)


def test_zero_sigma_makes_rounds_free(ladder, hyper):
    free = MarketState(n_servers=3, ladder=ladder,
                       profile=replace(EdgeProfile(), unit_energy_cost=0.0), hyper=hyper,
                       alpha=200.0, beta=0.5, e_cloud=20.0)
    assert cost_coeffs(free.profile).c == 0.0
    contract = build_contract([50.0, 100.0], [[50.0, 100.0], [50.0, 100.0]], free)
    np.testing.assert_allclose(contract.r1, 0.0)
    np.testing.assert_allclose(contract.r2, 0.0)
