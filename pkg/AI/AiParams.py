# AI/AiParams.py
# ======================================================================
# Trainer hyper-parameters.  Reference defaults:
#   γ 0.99 · τ 0.005 · κ 0.05 · lrs 2e-7 / 2e-6 · weight decay 1e-4
#   M 6 · ϱ 0.5 · λ 0.01
# Widths, replay size, V and Z are workbench choices.
# ======================================================================

from __future__ import annotations

from dataclasses import dataclass

from AI.SacOps import ACTOR_SIGNS
from Parameters.simulation import VARIANTS


@dataclass(frozen=True)
class TrainerConfig:
    variant: str = "edmsac"
    seed: int = 0
    gamma: float = 0.99
    tau: float = 0.005
    kappa: float = 0.05
    actor_lr: float = 2e-7
    critic_lr: float = 2e-6
    gsac_actor_lr: float = 1e-4
    gsac_critic_lr: float = 1e-3
    weight_decay: float = 1e-4
    batch_size: int = 256
    buffer_capacity: int = 100_000
    steps: int = 5000                    # V
    per_step: int = 1                    # Z, transitions collected per step
    prune_rate: float = 0.5              # ϱ
    denoise_steps: int = 6               # M
    eps_min: float = 0.1
    eps_max: float = 10.0
    penalty: float = 0.01                # λ
    reward_scale: float = 1e-3
    learning_starts: int | None = None   # defaults to batch_size
    eval_every: int = 1
    hidden: int = 256
    depth: int = 2
    time_dim: int = 16
    actor_sign: str = "standard"
    clip_denoised: bool = True

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if not (0 < self.gamma <= 1 and 0 < self.tau <= 1):
            raise ValueError("gamma and tau must lie in (0, 1]")
        if self.kappa < 0:
            raise ValueError("kappa must be ≥ 0")
        if min(self.batch_size, self.buffer_capacity, self.per_step, self.eval_every,
               self.denoise_steps, self.hidden, self.depth) < 1:
            raise ValueError("sizes and counts must be ≥ 1")
        if self.steps < 0:
            raise ValueError("steps must be ≥ 0")
        if not 0.0 <= self.prune_rate < 1.0:
            raise ValueError(f"prune_rate must be in [0, 1), got {self.prune_rate}")
        if min(self.actor_lr, self.critic_lr, self.gsac_actor_lr, self.gsac_critic_lr,
               self.weight_decay, self.penalty, self.reward_scale) < 0:
            raise ValueError("learning rates, weight decay, penalty and reward scale must be ≥ 0")
        if self.time_dim < 2 or self.time_dim % 2:
            raise ValueError("time_dim must be even")
        if self.actor_sign not in ACTOR_SIGNS:
            raise ValueError(f"actor_sign must be one of {ACTOR_SIGNS}")
        if self.learning_starts is not None and self.learning_starts < 1:
            raise ValueError("learning_starts must be ≥ 1")

    # ── per-variant effective values ─────────────────────────────────
    @property
    def diffusion(self) -> bool:
        return self.variant != "gsac"

    @property
    def effective_prune_rate(self) -> float:
        return self.prune_rate if self.variant == "edmsac" else 0.0

    @property
    def learning_rates(self) -> tuple[float, float]:
        if self.variant == "gsac":
            return self.gsac_actor_lr, self.gsac_critic_lr
        return self.actor_lr, self.critic_lr

    @property
    def warmup(self) -> int:
        return self.batch_size if self.learning_starts is None else self.learning_starts
