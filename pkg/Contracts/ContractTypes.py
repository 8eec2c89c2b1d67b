# Contracts/ContractTypes.py
# ======================================================================
# Value types shared by the contract engine, the oracle and the MDP:
#
#   TypeLadder        θ¹, θ², p¹ and the K×K transition matrix p²
#   TwoPeriodContract first-period menu + one second-period menu per
#                     first-period type
#   MarketState       one sampled market (N, ladder, costs, α, β, σ, E_C)
#
# Type indices are 0-based everywhere (k = 0 … K−1).
# ======================================================================

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from Economics.EconModel import CostCoeffs, EdgeProfile, QualityHyper, cost_coeffs

SIMPLEX_TOL = 1e-12


class ContractError(ValueError):
    """Raised when a ladder / contract violates a structural invariant."""


def _vector(name: str, values, length: int | None = None) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True)
    if arr.ndim != 1:
        raise ContractError(f"{name} must be a vector, got shape {arr.shape}")
    if length is not None and arr.shape[0] != length:
        raise ContractError(f"{name} must have length {length}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ContractError(f"{name} contains non-finite entries")
    arr.setflags(write=False)
    return arr


def _matrix(name: str, values, k: int) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True)
    if arr.shape != (k, k):
        raise ContractError(f"{name} must be {k}×{k}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ContractError(f"{name} contains non-finite entries")
    arr.setflags(write=False)
    return arr


def dominates(upper: np.ndarray, lower: np.ndarray, tol: float = SIMPLEX_TOL) -> bool:
    """First-order stochastic dominance of `upper` over `lower`."""
    return bool(np.all(np.cumsum(upper) <= np.cumsum(lower) + tol))


# ────────── type ladder ──────────────────────────────────────────────
@dataclass(frozen=True, eq=False)
class TypeLadder:
    theta1: np.ndarray
    theta2: np.ndarray
    p1: np.ndarray
    p2: np.ndarray

    def __post_init__(self) -> None:
        theta1 = _vector("theta1", self.theta1)
        k = theta1.shape[0]
        if k < 1:
            raise ContractError("a ladder needs at least one type")
        object.__setattr__(self, "theta1", theta1)
        object.__setattr__(self, "theta2", _vector("theta2", self.theta2, k))
        object.__setattr__(self, "p1", _vector("p1", self.p1, k))
        object.__setattr__(self, "p2", _matrix("p2", self.p2, k))

        for name in ("theta1", "theta2"):
            theta = getattr(self, name)
            if np.any(theta <= 0):
                raise ContractError(f"{name} must be strictly positive")
            if np.any(np.diff(theta) <= 0):
                raise ContractError(f"{name} must be strictly ascending, got {theta}")

        rows = [("p1", self.p1)] + [(f"p2[{i}]", self.p2[i]) for i in range(k)]
        for name, row in rows:
            if np.any(row < 0):
                raise ContractError(f"{name} has negative probabilities")
            if abs(row.sum() - 1.0) > SIMPLEX_TOL * max(1, k):
                raise ContractError(f"{name} must sum to 1, got {row.sum()!r}")
        for i in range(1, k):
            if not dominates(self.p2[i], self.p2[i - 1]):
                raise ContractError(
                    f"p2 row {i} must stochastically dominate row {i - 1}"
                )

    @property
    def k_types(self) -> int:
        return int(self.theta1.shape[0])


# ────────── contract ─────────────────────────────────────────────────
@dataclass(frozen=True, eq=False)
class TwoPeriodContract:
    t1: np.ndarray
    r1: np.ndarray
    t2: np.ndarray
    r2: np.ndarray

    def __post_init__(self) -> None:
        t1 = _vector("t1", self.t1)
        k = t1.shape[0]
        object.__setattr__(self, "t1", t1)
        object.__setattr__(self, "r1", _vector("r1", self.r1, k))
        object.__setattr__(self, "t2", _matrix("t2", self.t2, k))
        object.__setattr__(self, "r2", _matrix("r2", self.r2, k))
        for name in ("t1", "r1", "t2", "r2"):
            if np.any(getattr(self, name) < 0):
                raise ContractError(f"{name} has negative entries")

    @property
    def k_types(self) -> int:
        return int(self.t1.shape[0])

    def rounds_key(self) -> tuple[float, ...]:
        """Flattened rounds (t1 then t2 row-major), used for tie-breaking."""
        return tuple(self.t1.tolist() + self.t2.ravel().tolist())


# ────────── market ───────────────────────────────────────────────────
@dataclass(frozen=True, eq=False)
class MarketState:
    n_servers: int
    ladder: TypeLadder
    profile: EdgeProfile
    hyper: QualityHyper
    alpha: float
    beta: float
    e_cloud: float
    costs: CostCoeffs = field(init=False)

    def __post_init__(self) -> None:
        if self.n_servers < 1:
            raise ContractError(f"n_servers must be ≥ 1, got {self.n_servers}")
        if self.alpha < 0:
            raise ContractError(f"alpha must be ≥ 0, got {self.alpha}")
        if not 0.0 <= self.beta <= 1.0:
            raise ContractError(f"beta must lie in [0, 1], got {self.beta}")
        if self.e_cloud < 0:
            raise ContractError(f"e_cloud must be ≥ 0, got {self.e_cloud}")
        object.__setattr__(self, "costs", cost_coeffs(self.profile))

    @property
    def sigma(self) -> float:
        return self.profile.unit_energy_cost

    @property
    def k_types(self) -> int:
        return self.ladder.k_types


class ProfitBreakdown(NamedTuple):
    u1: float
    u2: float
    beta: float
    total: float
