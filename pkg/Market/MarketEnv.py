# Market/MarketEnv.py
# ======================================================================
# The contract problem as an episodic decision process.
#
#   state   (N, K, σ, P_dBm, r_Mbps, E_C, p¹, θ¹, θ², p² row-major)
#           → length 6 + 3K + K²
#   action  Ã ∈ [−1, 1]^d,  d = K + K² ("full") or 2K ("shared")
#   reward  U¹ + βU² − λ·ΣÃ²
#
# Every step draws a fresh market; the terminal flag rises every Z steps.
# ======================================================================

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import NamedTuple

import numpy as np
import pandas as pd

from Contracts.ContractOps import build_contract, cloud_profit
from Contracts.ContractTypes import MarketState, ProfitBreakdown, TwoPeriodContract, TypeLadder
from Economics.EconModel import EdgeProfile, QualityHyper
from Market.Sampler import SamplingRanges, sample_market
from Utils.csv_out import write_csv

log = logging.getLogger(__name__)

ACTION_MODES = ("full", "shared")


@dataclass(frozen=True)
class EnvSettings:
    penalty: float = 0.01
    action_mode: str = "full"
    episode_length: int = 1
    t_min: float = 0.0
    t_max: float = 200.0
    eval_states: int = 32

    def __post_init__(self) -> None:
        if self.action_mode not in ACTION_MODES:
            raise ValueError(f"action_mode must be one of {ACTION_MODES}, got {self.action_mode!r}")
        if self.penalty < 0:
            raise ValueError(f"penalty must be ≥ 0, got {self.penalty}")
        if self.episode_length < 1 or self.eval_states < 1:
            raise ValueError("episode_length and eval_states must be ≥ 1")
        if not 0 <= self.t_min < self.t_max:
            raise ValueError(f"need 0 ≤ t_min < t_max, got [{self.t_min}, {self.t_max}]")


# ────────── state ────────────────────────────────────────────────────
def state_dim(k: int) -> int:
    return 6 + 3 * k + k * k


def state_vector(market: MarketState) -> np.ndarray:
    ladder, profile = market.ladder, market.profile
    head = [market.n_servers, market.k_types, market.sigma, profile.tx_power_dbm,
            profile.link_rate_bps / 1e6, market.e_cloud]
    return np.concatenate([np.asarray(head, dtype=np.float64), ladder.p1,
                           ladder.theta1, ladder.theta2, ladder.p2.ravel()])


def state_features(vector: np.ndarray) -> np.ndarray:
    """Rescale a state vector (or a batch of them) to O(1) network inputs."""
    vector = np.asarray(vector, dtype=np.float64)
    k = int(round(vector[..., 1].flat[0]))
    scale = np.concatenate([
        [18.0, 5.0, 1.0, 33.0, 3.0, 25.0],
        np.ones(k), np.full(2 * k, 25.0), np.ones(k * k),
    ])
    return vector / scale


def market_from_vector(vector, *, alpha: float, beta: float,
                       edge: EdgeProfile = EdgeProfile(),
                       hyper: QualityHyper = QualityHyper()) -> MarketState:
    """Inverse of `state_vector`; α and β are not part of the state."""
    vector = np.asarray(vector, dtype=np.float64)
    k = int(round(vector[1]))
    if k < 1 or vector.shape != (state_dim(k),):
        raise ValueError(f"state vector of length {vector.shape} does not match K={k}")
    body = vector[6:]
    ladder = TypeLadder(theta1=body[k:2 * k], theta2=body[2 * k:3 * k],
                        p1=body[:k], p2=body[3 * k:].reshape(k, k))
    profile = replace(edge, unit_energy_cost=float(vector[2]), tx_power_dbm=float(vector[3]),
                      link_rate_bps=float(vector[4]) * 1e6)
    return MarketState(n_servers=int(round(vector[0])), ladder=ladder, profile=profile,
                       hyper=hyper, alpha=alpha, beta=beta, e_cloud=float(vector[5]))


@dataclass(frozen=True, eq=False)
class EnvState:
    market: MarketState
    vector: np.ndarray

    @classmethod
    def of(cls, market: MarketState) -> "EnvState":
        return cls(market=market, vector=state_vector(market))

    @property
    def features(self) -> np.ndarray:
        return state_features(self.vector)

    @property
    def digest(self) -> str:
        return hashlib.sha1(self.vector.tobytes()).hexdigest()[:12]


def sample_state(rng: np.random.Generator, ranges: SamplingRanges,
                 edge: EdgeProfile = EdgeProfile(),
                 hyper: QualityHyper = QualityHyper()) -> EnvState:
    return EnvState.of(sample_market(rng, ranges, edge, hyper))


# ────────── action ───────────────────────────────────────────────────
def action_dim(k: int, mode: str = "full") -> int:
    if mode not in ACTION_MODES:
        raise ValueError(f"action_mode must be one of {ACTION_MODES}, got {mode!r}")
    return k + k * k if mode == "full" else 2 * k


class MappedAction(NamedTuple):
    t1: np.ndarray
    t2: np.ndarray
    clamped: int


def map_action(raw, t_min: float, t_max: float, k: int, mode: str = "full") -> MappedAction:
    raw = np.asarray(raw, dtype=np.float64)
    if raw.shape != (action_dim(k, mode),):
        raise ValueError(f"action must have shape ({action_dim(k, mode)},), got {raw.shape}")
    clipped = np.clip(raw, -1.0, 1.0)
    clamped = int(np.count_nonzero(clipped != raw))
    rounds = t_min + (clipped + 1.0) / 2.0 * (t_max - t_min)

    t1 = np.sort(rounds[:k])
    if mode == "full":
        t2 = np.sort(rounds[k:].reshape(k, k), axis=1)
    else:
        t2 = np.tile(np.sort(rounds[k:]), (k, 1))
    return MappedAction(t1, t2, clamped)


# ────────── reward ───────────────────────────────────────────────────
class StepOutcome(NamedTuple):
    reward: float
    profit: ProfitBreakdown
    penalty: float
    contract: TwoPeriodContract
    clamped: int


def step(state: EnvState, raw, penalty: float, *, t_min: float = 0.0,
         t_max: float = 200.0, mode: str = "full") -> StepOutcome:
    if penalty < 0:
        raise ValueError(f"penalty weight must be ≥ 0, got {penalty}")
    market = state.market
    mapped = map_action(raw, t_min, t_max, market.k_types, mode)
    contract = build_contract(mapped.t1, mapped.t2, market)
    profit = cloud_profit(contract, market)
    action = np.clip(np.asarray(raw, dtype=np.float64), -1.0, 1.0)
    cost = penalty * float(action @ action)
    return StepOutcome(profit.total - cost, profit, cost, contract, mapped.clamped)


# ────────── episodic wrapper ─────────────────────────────────────────
class ContractEnv:
    """Contextual-bandit episodes: each step is scored on the current market,
    then a fresh market is drawn; `done` is raised every Z steps."""

    def __init__(self, ranges: SamplingRanges, settings: EnvSettings,
                 rng: np.random.Generator, *, edge: EdgeProfile = EdgeProfile(),
                 hyper: QualityHyper = QualityHyper(), record: bool = False) -> None:
        self.ranges = ranges
        self.settings = settings
        self.rng = rng
        self.edge = edge
        self.hyper = hyper
        self.record = record
        self.diagnostics: list[dict] = []
        self._t = 0
        self.state = self._draw()

    @property
    def action_dim(self) -> int:
        return action_dim(self.ranges.k_types, self.settings.action_mode)

    @property
    def state_dim(self) -> int:
        return state_dim(self.ranges.k_types)

    def _draw(self) -> EnvState:
        return sample_state(self.rng, self.ranges, self.edge, self.hyper)

    def reset(self) -> EnvState:
        self._t = 0
        self.state = self._draw()
        return self.state

    def step(self, raw) -> tuple[EnvState, float, bool, StepOutcome]:
        s = self.settings
        outcome = step(self.state, raw, s.penalty, t_min=s.t_min, t_max=s.t_max,
                       mode=s.action_mode)
        if outcome.clamped:
            log.debug("[Env] %d action entries clamped", outcome.clamped)
        if self.record:
            self.diagnostics.append({
                "state_hash": self.state.digest,
                "action": " ".join(f"{a:.12g}" for a in np.asarray(raw, dtype=np.float64)),
                "profit": outcome.profit.total,
                "penalty": outcome.penalty,
                "reward": outcome.reward,
                "clamped": outcome.clamped,
            })
        self._t += 1
        done = self._t >= s.episode_length
        if done:
            self._t = 0
        self.state = self._draw()
        return self.state, outcome.reward, done, outcome

    def write_diagnostics(self, path: Path) -> None:
        write_csv(pd.DataFrame(self.diagnostics), path)
