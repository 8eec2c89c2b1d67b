# Contracts/ContractOps.py
# ======================================================================
# Closed-form two-period contract mathematics.
#
#   optimal_rewards_p2     binding IR at type 0 + binding adjacent IC
#   optimal_rewards_p1     same, plus the β-weighted change of the
#                          second-period rents between adjacent rows
#   admissible_rounds      projects arbitrary rounds onto the set where
#                          the closed form is globally feasible
#   check_feasible_*       reduced (sufficient) conditions
#   verify_all_constraints brute-force enumeration of every IR/IC/IIC
#   es_expected_utility    ES payoff over both periods
#   cloud_profit           U¹, U², U¹ + βU²
# ======================================================================

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from Contracts.ContractTypes import (
    ContractError,
    MarketState,
    ProfitBreakdown,
    TwoPeriodContract,
    TypeLadder,
)
from Economics.EconModel import CostCoeffs, model_quality

BINDING_RTOL = 1e-9


def binding_tolerance(*blocks: tuple[np.ndarray, np.ndarray]) -> float:
    """Absolute tolerance 1e-9·max(1, |θ_max·R_max|) over (θ, R) blocks."""
    scale = 1.0
    for theta, reward in blocks:
        theta = np.asarray(theta, dtype=np.float64)
        reward = np.asarray(reward, dtype=np.float64)
        if reward.size:
            scale = max(scale, float(np.max(np.abs(theta)) * np.max(np.abs(reward))))
    return BINDING_RTOL * scale


def _check_monotone(name: str, values: np.ndarray) -> None:
    if np.any(values < 0):
        raise ContractError(f"{name} must be ≥ 0, got {values}")
    if np.any(np.diff(values) < 0):
        raise ContractError(f"{name} must be non-decreasing in the type index, got {values}")


# ────────── second period ────────────────────────────────────────────
def optimal_rewards_p2(t2_row, theta2, costs: CostCoeffs) -> np.ndarray:
    t = np.asarray(t2_row, dtype=np.float64)
    theta = np.asarray(theta2, dtype=np.float64)
    if t.shape != theta.shape:
        raise ContractError(f"rounds {t.shape} and types {theta.shape} differ in length")
    _check_monotone("second-period rounds", t)
    first = (costs.c * t[0] + costs.e_fixed) / theta[0]
    steps = costs.c * np.diff(t) / theta[1:]
    return first + np.concatenate(([0.0], np.cumsum(steps)))


def period2_rents(t2_row, r2_row, theta2, costs: CostCoeffs) -> np.ndarray:
    """Utility of each second-period type for its own item."""
    return (np.asarray(theta2) * np.asarray(r2_row)
            - costs.c * np.asarray(t2_row) - costs.e_fixed)


def _closed_form_rents(t2_row: np.ndarray, theta2: np.ndarray, costs: CostCoeffs) -> np.ndarray:
    return period2_rents(t2_row, optimal_rewards_p2(t2_row, theta2, costs), theta2, costs)


def rent_shift(prev_row, cur_row, theta2, c: float) -> np.ndarray:
    """Φ_j: second-period rent of type j under the previous row minus under
    the current row (Φ_0 = 0)."""
    prev_row = np.asarray(prev_row, dtype=np.float64)
    cur_row = np.asarray(cur_row, dtype=np.float64)
    theta = np.asarray(theta2, dtype=np.float64)
    weights = (prev_row[:-1] - cur_row[:-1]) * (1.0 / theta[:-1] - 1.0 / theta[1:])
    phi = np.zeros_like(theta)
    phi[1:] = theta[1:] * c * np.cumsum(weights)
    return phi


# ────────── first period ─────────────────────────────────────────────
def optimal_rewards_p1(t1, t2, ladder: TypeLadder, costs: CostCoeffs, beta: float) -> np.ndarray:
    t1 = np.asarray(t1, dtype=np.float64)
    t2 = np.asarray(t2, dtype=np.float64)
    k_types = ladder.k_types
    if t1.shape != (k_types,) or t2.shape != (k_types, k_types):
        raise ContractError(
            f"rounds shapes {t1.shape}/{t2.shape} do not match K={k_types}"
        )
    _check_monotone("first-period rounds", t1)
    for k in range(k_types):
        _check_monotone(f"second-period rounds of row {k}", t2[k])

    theta1 = ladder.theta1
    rewards = np.empty(k_types)
    rewards[0] = (costs.c * t1[0] + costs.e_fixed) / theta1[0]
    for k in range(1, k_types):
        phi = rent_shift(t2[k - 1], t2[k], ladder.theta2, costs.c)
        rewards[k] = (rewards[k - 1]
                      + costs.c * (t1[k] - t1[k - 1]) / theta1[k]
                      + beta / theta1[k] * float(ladder.p2[k] @ phi))
    return rewards


# ────────── projection onto feasible rounds ──────────────────────────
def admissible_rounds(t1, t2, ladder: TypeLadder, costs: CostCoeffs, beta: float,
                      *, integer_rounds: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Sort, order rows across first-period types and damp row increments so
    the closed-form first-period rewards stay non-decreasing.

    Rounds that already satisfy all of this are returned unchanged.
    """
    t1 = np.sort(np.asarray(t1, dtype=np.float64))
    t2 = np.sort(np.asarray(t2, dtype=np.float64), axis=1)
    if np.any(t1 < 0) or np.any(t2 < 0):
        raise ContractError("rounds must be ≥ 0")
    if integer_rounds:
        t1, t2 = np.floor(t1), np.floor(t2)
    if beta <= 0 or ladder.k_types == 1:
        return t1, t2

    t2 = np.maximum.accumulate(t2, axis=0)
    for k in range(1, ladder.k_types):
        rise = beta * float(ladder.p2[k] @ (
            _closed_form_rents(t2[k], ladder.theta2, costs)
            - _closed_form_rents(t2[k - 1], ladder.theta2, costs)))
        budget = costs.c * (t1[k] - t1[k - 1])
        if rise > budget:
            # rents are affine in the row, so the rise scales with the step
            t2[k] = t2[k - 1] + (budget / rise) * (t2[k] - t2[k - 1])
            if integer_rounds:
                t2[k] = np.floor(t2[k])
    return t1, t2


def build_contract(t1, t2, state: MarketState, *, integer_rounds: bool = False) -> TwoPeriodContract:
    ladder, costs = state.ladder, state.costs
    t1, t2 = admissible_rounds(t1, t2, ladder, costs, state.beta,
                               integer_rounds=integer_rounds)
    r2 = np.vstack([optimal_rewards_p2(row, ladder.theta2, costs) for row in t2])
    r1 = optimal_rewards_p1(t1, t2, ladder, costs, state.beta)
    return TwoPeriodContract(t1=t1, r1=r1, t2=t2, r2=r2)


# ────────── reduced conditions ───────────────────────────────────────
@dataclass(frozen=True)
class FeasibilityReport:
    violations: tuple[str, ...]
    residuals: dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.violations


def check_feasible_p2(t2_row, r2_row, theta2, costs: CostCoeffs,
                      tol: float | None = None) -> FeasibilityReport:
    t = np.asarray(t2_row, dtype=np.float64)
    r = np.asarray(r2_row, dtype=np.float64)
    theta = np.asarray(theta2, dtype=np.float64)
    tol = binding_tolerance((theta, r)) if tol is None else tol

    ir = float(theta[0] * r[0] - costs.c * t[0] - costs.e_fixed)
    own = theta[1:] * r[1:] - costs.c * t[1:]
    mimic = theta[1:] * r[:-1] - costs.c * t[:-1]
    ic = float(np.max(np.abs(own - mimic))) if own.size else 0.0

    violations = []
    if r[0] < -tol or np.any(np.diff(r) < -tol):
        violations.append("monotone_rewards")
    if t[0] < 0 or np.any(np.diff(t) < 0):
        violations.append("monotone_rounds")
    if abs(ir) > tol:
        violations.append("ir_binding")
    if ic > tol:
        violations.append("ic_binding")
    return FeasibilityReport(tuple(violations), {"ir_binding": ir, "ic_binding": ic})


def _first_period_payoffs(contract: TwoPeriodContract, ladder: TypeLadder,
                          costs: CostCoeffs, beta: float) -> np.ndarray:
    """V[k, k']: total payoff of true type k reporting k' in period 1 and then
    picking its best item from menu k'."""
    theta2 = ladder.theta2
    # menu_value[k', j] = max_{j'} θ²_j R²[k', j'] − c T²[k', j'] − E
    items = (theta2[None, :, None] * contract.r2[:, None, :]
             - costs.c * contract.t2[:, None, :] - costs.e_fixed)
    menu_value = items.max(axis=2)
    first = (ladder.theta1[:, None] * contract.r1[None, :]
             - costs.c * contract.t1[None, :] - costs.e_fixed)
    second = ladder.p2 @ menu_value.T
    return first + beta * second


def check_feasible_p1(contract: TwoPeriodContract, ladder: TypeLadder, costs: CostCoeffs,
                      beta: float, tol: float | None = None) -> FeasibilityReport:
    if contract.k_types != ladder.k_types:
        raise ContractError("contract and ladder disagree on K")
    tol = binding_tolerance((ladder.theta1, contract.r1), (ladder.theta2, contract.r2)) \
        if tol is None else tol
    t1, r1 = contract.t1, contract.r1

    ir = float(ladder.theta1[0] * r1[0] - costs.c * t1[0] - costs.e_fixed)
    rents = period2_rents(contract.t2, contract.r2, ladder.theta2[None, :], costs)
    truthful = (ladder.theta1[:, None] * r1[None, :] - costs.c * t1[None, :]
                - costs.e_fixed + beta * ladder.p2 @ rents.T)
    own = np.diag(truthful)[1:]
    down = truthful[np.arange(1, ladder.k_types), np.arange(ladder.k_types - 1)]
    iic = float(np.max(np.abs(own - down))) if own.size else 0.0

    violations = []
    if r1[0] < -tol or np.any(np.diff(r1) < -tol):
        violations.append("monotone_rewards")
    if t1[0] < 0 or np.any(np.diff(t1) < 0):
        violations.append("monotone_rounds")
    if abs(ir) > tol:
        violations.append("ir_binding")
    if iic > tol:
        violations.append("iic_binding")
    if beta > 0 and np.any(np.diff(contract.t2, axis=0) < 0):
        violations.append("cross_period_order")
    return FeasibilityReport(tuple(violations), {"ir_binding": ir, "iic_binding": iic})


def check_feasible_contract(contract: TwoPeriodContract, ladder: TypeLadder,
                            costs: CostCoeffs, beta: float) -> FeasibilityReport:
    """Reduced conditions of both periods; sufficient for the full enumeration."""
    tol = binding_tolerance((ladder.theta1, contract.r1), (ladder.theta2, contract.r2))
    violations = list(check_feasible_p1(contract, ladder, costs, beta, tol).violations)
    for k in range(contract.k_types):
        row = check_feasible_p2(contract.t2[k], contract.r2[k], ladder.theta2, costs, tol)
        violations += [f"row{k}:{name}" for name in row.violations]
    return FeasibilityReport(tuple(violations))


# ────────── brute-force enumeration ──────────────────────────────────
@dataclass(frozen=True)
class ConstraintReport:
    min_slack: dict[str, float]
    residuals: dict[str, float]
    scale: float

    def passed(self, rtol: float = BINDING_RTOL) -> bool:
        return all(v >= -rtol * self.scale for v in self.min_slack.values())


def _min_or_inf(values: np.ndarray) -> float:
    return float(np.min(values)) if values.size else float("inf")


def verify_all_constraints(contract: TwoPeriodContract, ladder: TypeLadder,
                           costs: CostCoeffs, beta: float) -> ConstraintReport:
    k_types = ladder.k_types
    if contract.k_types != k_types:
        raise ContractError("contract and ladder disagree on K")
    theta1, theta2 = ladder.theta1, ladder.theta2
    scale = binding_tolerance((theta1, contract.r1), (theta2, contract.r2)) / BINDING_RTOL

    # items[k, j, j'] = utility of second-period type j taking item j' of menu k
    items = (theta2[None, :, None] * contract.r2[:, None, :]
             - costs.c * contract.t2[:, None, :] - costs.e_fixed)
    own2 = np.einsum("kjj->kj", items)
    off = ~np.eye(k_types, dtype=bool)
    ic2 = (own2[:, :, None] - items)[:, off]

    payoff = _first_period_payoffs(contract, ladder, costs, beta)
    own1 = np.diag(payoff)
    iic = (own1[:, None] - payoff)[off]

    min_slack = {
        "ir2": _min_or_inf(own2),
        "ic2": _min_or_inf(ic2),
        "ir1": _min_or_inf(own1),
        "iic": _min_or_inf(iic),
    }
    idx = np.arange(1, k_types)
    residuals = {
        "ir2_type1": float(np.max(np.abs(own2[:, 0]))),
        "ir1_type1": float(abs(theta1[0] * contract.r1[0] - costs.c * contract.t1[0]
                               - costs.e_fixed)),
        "ic2_adjacent": float(np.max(np.abs(own2[:, 1:] - items[:, idx, idx - 1])))
        if k_types > 1 else 0.0,
        "iic_adjacent": float(np.max(np.abs(own1[1:] - payoff[idx, idx - 1])))
        if k_types > 1 else 0.0,
    }
    return ConstraintReport(min_slack=min_slack, residuals=residuals, scale=scale)


# ────────── utilities & profit ───────────────────────────────────────
def es_expected_utility(k: int, contract: TwoPeriodContract, ladder: TypeLadder,
                        costs: CostCoeffs, beta: float) -> float:
    if not 0 <= k < ladder.k_types:
        raise IndexError(f"type index {k} outside 0…{ladder.k_types - 1}")
    first = (ladder.theta1[k] * contract.r1[k] - costs.c * contract.t1[k]
             - costs.e_fixed)
    rents = period2_rents(contract.t2[k], contract.r2[k], ladder.theta2, costs)
    return float(first + beta * ladder.p2[k] @ rents)


def cloud_profit(contract: TwoPeriodContract, state: MarketState) -> ProfitBreakdown:
    ladder = state.ladder
    integration = state.sigma * state.e_cloud
    gain1 = state.alpha * model_quality(contract.t1, state.hyper) - contract.r1
    gain2 = state.alpha * model_quality(contract.t2, state.hyper) - contract.r2
    u1 = float(state.n_servers * ladder.p1 @ gain1 - integration)
    u2 = float(state.n_servers * ladder.p1 @ np.sum(ladder.p2 * gain2, axis=1) - integration)
    return ProfitBreakdown(u1=u1, u2=u2, beta=state.beta, total=u1 + state.beta * u2)
