# Market/Sampler.py
# ======================================================================
# Random market instances:
#   • θ ladders stratified over [theta_low, theta_high) (one stratum per
#     type, so ladders come out strictly ascending)
#   • p¹ ~ Dirichlet, p² rows ~ Dirichlet then dominance-sorted
#   • σ, P, r, E_C uniform in their ranges, α from a finite set
# ======================================================================

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from Contracts.ContractTypes import MarketState, TypeLadder
from Economics.EconModel import EdgeProfile, QualityHyper
from Parameters.simulation import ALPHA_CHOICES

TIE_JITTER = 1e-6


@dataclass(frozen=True)
class SamplingRanges:
    k_types: int = 2
    n_servers: int = 3
    beta: float = 0.5
    theta_low: float = 15.0
    theta_high: float = 25.0
    sigma: tuple[float, float] = (0.5, 1.0)
    power_dbm: tuple[float, float] = (20.0, 33.0)
    rate_mbps: tuple[float, float] = (1.0, 3.0)
    e_cloud: tuple[float, float] = (20.0, 25.0)
    alpha_choices: tuple[float, ...] = ALPHA_CHOICES
    dirichlet: float = 1.0

    def __post_init__(self) -> None:
        if self.k_types < 1:
            raise ValueError(f"k_types must be ≥ 1, got {self.k_types}")
        if not 0 < self.theta_low < self.theta_high:
            raise ValueError("need 0 < theta_low < theta_high")
        for name in ("sigma", "power_dbm", "rate_mbps", "e_cloud"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name} range is empty: ({lo}, {hi})")
        if not self.alpha_choices:
            raise ValueError("alpha_choices must not be empty")
        if self.dirichlet <= 0:
            raise ValueError("dirichlet concentration must be > 0")


# ────────── ladder pieces ────────────────────────────────────────────
def ensure_ascending(theta: np.ndarray, step: float = TIE_JITTER) -> np.ndarray:
    """Bump ties (or inversions) upward by `step` until strictly ascending."""
    out = np.array(theta, dtype=np.float64)
    for i in range(1, out.shape[0]):
        while out[i] <= out[i - 1]:
            out[i] = out[i - 1] + step
    return out


def sample_theta(rng: np.random.Generator, k: int, low: float, high: float) -> np.ndarray:
    width = (high - low) / k
    edges = low + width * np.arange(k)
    return ensure_ascending(edges + width * rng.random(k))


def dominance_sorted(rows: np.ndarray) -> np.ndarray:
    """Reorder CDF values column by column so row k is dominated by row k+1."""
    cdf = np.minimum(np.cumsum(rows, axis=1), 1.0)
    cdf = -np.sort(-cdf, axis=0)
    cdf[:, -1] = 1.0
    return np.clip(np.diff(cdf, axis=1, prepend=0.0), 0.0, None)


def sample_ladder(rng: np.random.Generator, ranges: SamplingRanges) -> TypeLadder:
    k = ranges.k_types
    conc = np.full(k, ranges.dirichlet)
    return TypeLadder(
        theta1=sample_theta(rng, k, ranges.theta_low, ranges.theta_high),
        theta2=sample_theta(rng, k, ranges.theta_low, ranges.theta_high),
        p1=rng.dirichlet(conc),
        p2=dominance_sorted(rng.dirichlet(conc, size=k)),
    )


# ────────── market ───────────────────────────────────────────────────
def sample_market(rng: np.random.Generator, ranges: SamplingRanges,
                  edge: EdgeProfile = EdgeProfile(),
                  hyper: QualityHyper = QualityHyper()) -> MarketState:
    ladder = sample_ladder(rng, ranges)
    profile = replace(
        edge,
        unit_energy_cost=float(rng.uniform(*ranges.sigma)),
        tx_power_dbm=float(rng.uniform(*ranges.power_dbm)),
        link_rate_bps=float(rng.uniform(*ranges.rate_mbps)) * 1e6,
    )
    return MarketState(
        n_servers=ranges.n_servers,
        ladder=ladder,
        profile=profile,
        hyper=hyper,
        alpha=float(rng.choice(np.asarray(ranges.alpha_choices, dtype=np.float64))),
        beta=ranges.beta,
        e_cloud=float(rng.uniform(*ranges.e_cloud)),
    )
