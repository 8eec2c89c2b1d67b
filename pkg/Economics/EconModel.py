# Economics/EconModel.py
# ======================================================================
# Quality / energy / cost model of one edge server (ES).
#
#   quality      Q(T)    = 1 − 2^(−T·a),   a = (2 − Lδ)δε / 2
#   perception   E_per   = ς · Υ_per · D_fea · f²
#   creation     E_cre   = ρ · T · Υ_cre · f²
#   upload       E_upl   = P_W · D_agent / r,   P_W = 10^((P_dBm − 30)/10)
#
#   c = σ ρ Υ_cre f²        (cost of one training round)
#   E = σ (E_per + E_upl)   (fixed cost per period)
#
# Every function is pure; utilities are dimensionless "cost units".
# ======================================================================

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# 1 MB = 8·10⁶ bits (decimal megabyte)
MB_BITS = 8_000_000.0


# ────────── value types ──────────────────────────────────────────────
@dataclass(frozen=True)
class QualityHyper:
    """Learning hyper-parameters that shape the quality curve."""

    delta: float = 0.02
    lipschitz: float = 8.0
    strong_convexity: float = 2.0

    def __post_init__(self) -> None:
        if self.lipschitz <= 0:
            raise ValueError(f"lipschitz must be > 0, got {self.lipschitz}")
        if self.strong_convexity <= 0:
            raise ValueError(
                f"strong_convexity must be > 0, got {self.strong_convexity}"
            )
        if not 0 < self.delta < 2.0 / self.lipschitz:
            raise ValueError(
                f"delta must lie in (0, 2/L) = (0, {2.0 / self.lipschitz}), "
                f"got {self.delta}"
            )

    @property
    def exponent(self) -> float:
        """Coefficient a of the exponent (rounds⁻¹)."""
        return (2.0 - self.lipschitz * self.delta) * self.delta * self.strong_convexity / 2.0


@dataclass(frozen=True)
class EdgeProfile:
    hw_const: float = 1e-23
    cycles_perceive: float = 100.0
    cycles_create: float = 120.0
    switch_cap: float = 1e-16
    cpu_hz: float = 6.4e7
    tx_power_dbm: float = 20.0
    data_feature_bits: float = 1.0 * MB_BITS
    data_agent_bits: float = 10.0 * MB_BITS
    link_rate_bps: float = 1e6
    unit_energy_cost: float = 0.5

    def __post_init__(self) -> None:
        # zero data sizes / σ are legal degenerate inputs, negatives are not
        for name in ("hw_const", "cycles_perceive", "cycles_create",
                     "switch_cap", "cpu_hz", "data_feature_bits",
                     "data_agent_bits", "unit_energy_cost"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be a finite value ≥ 0, got {value}")
        if not 0.0 <= self.tx_power_dbm <= 60.0:
            raise ValueError(
                f"tx_power_dbm must lie in [0, 60], got {self.tx_power_dbm}"
            )
        if not math.isfinite(self.link_rate_bps) or self.link_rate_bps < 0:
            raise ValueError(f"link_rate_bps must be ≥ 0, got {self.link_rate_bps}")

    @property
    def tx_power_watts(self) -> float:
        return dbm_to_watts(self.tx_power_dbm)


@dataclass(frozen=True)
class CostCoeffs:
    c: float
    e_fixed: float

    def __post_init__(self) -> None:
        if self.c < 0 or self.e_fixed < 0:
            raise ValueError(f"cost coefficients must be ≥ 0, got c={self.c}, E={self.e_fixed}")


# ────────── helpers ──────────────────────────────────────────────────
def dbm_to_watts(power_dbm: float) -> float:
    return 10.0 ** ((power_dbm - 30.0) / 10.0)


def _check_rounds(rounds):
    arr = np.asarray(rounds, dtype=np.float64)
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise ValueError(f"rounds must be finite and ≥ 0, got {rounds}")
    return arr if arr.ndim else float(arr)


# ────────── quality & energy ─────────────────────────────────────────
def model_quality(rounds, hyper: QualityHyper):
    """Accuracy-like quality of the agent module after `rounds` rounds.

    Accepts a scalar or an array of rounds; the result has the same shape.
    """
    t = _check_rounds(rounds)
    return 1.0 - np.exp2(-t * hyper.exponent)


def energy_perception(profile: EdgeProfile) -> float:
    return (profile.hw_const * profile.cycles_perceive
            * profile.data_feature_bits * profile.cpu_hz ** 2)


def energy_creation(profile: EdgeProfile, rounds) -> float:
    t = _check_rounds(rounds)
    return profile.switch_cap * t * profile.cycles_create * profile.cpu_hz ** 2


def energy_upload(profile: EdgeProfile) -> float:
    if profile.link_rate_bps <= 0:
        raise ValueError("link_rate_bps must be > 0 to upload agent modules")
    return profile.tx_power_watts * profile.data_agent_bits / profile.link_rate_bps


def energy_total(profile: EdgeProfile, rounds) -> float:
    return (energy_perception(profile) + energy_creation(profile, rounds)
            + energy_upload(profile))


# ────────── costs & utility ──────────────────────────────────────────
def cost_coeffs(profile: EdgeProfile) -> CostCoeffs:
    sigma = profile.unit_energy_cost
    per_round = sigma * profile.switch_cap * profile.cycles_create * profile.cpu_hz ** 2
    fixed = sigma * (energy_perception(profile) + energy_upload(profile))
    return CostCoeffs(c=per_round, e_fixed=fixed)


def es_utility(theta, reward, rounds, costs: CostCoeffs):
    """θR − cT − E; broadcasts over numpy arrays."""
    return theta * reward - costs.c * rounds - costs.e_fixed
