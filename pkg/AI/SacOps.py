# AI/SacOps.py
# ======================================================================
# Soft actor-critic building blocks shared by every trainer variant.
#
#   TwinCritic      two Q(S, Ã) MLPs (S+d → H → H → 1)
#   critic_update   TD regression on y = r·scale + γ(1−d)(min Q̂ − κ log π̂)
#   actor_update    minimise κ log π − min Q   (or the literal −(Q + κ log π))
#   soft_update     target ← τ·online + (1−τ)·target
# ======================================================================

from __future__ import annotations

from typing import Callable, Mapping

import numpy as np

from AI.ReplayBuffer import Batch
from NN.Autodiff import Tensor, as_tensor, concat, minimum
from NN.Layers import Mlp, MlpSpec
from NN.Optim import Adam

ACTOR_SIGNS = ("standard", "literal")

QFunction = Callable[[np.ndarray, Tensor], Tensor]


class TwinCritic:
    def __init__(self, state_dim: int, action_dim: int, rng: np.random.Generator, *,
                 hidden: int = 256, depth: int = 2, name: str = "critic",
                 identical: bool = False) -> None:
        spec = MlpSpec((state_dim + action_dim,) + (hidden,) * depth + (1,))
        self.name = name
        self.q1 = Mlp(spec, rng, f"{name}.q1")
        self.q2 = self.q1.clone(f"{name}.q2") if identical else Mlp(spec, rng, f"{name}.q2")

    def __call__(self, states, actions) -> tuple[Tensor, Tensor]:
        inp = concat([as_tensor(np.asarray(states, dtype=np.float64)), as_tensor(actions)], axis=1)
        return self.q1(inp), self.q2(inp)

    def min_q(self, states, actions) -> Tensor:
        q1, q2 = self(states, actions)
        return minimum(q1, q2)

    def parameters(self) -> list[Tensor]:
        return self.q1.parameters() + self.q2.parameters()

    def state_dict(self) -> dict[str, np.ndarray]:
        return {**self.q1.state_dict(), **self.q2.state_dict()}

    def clone(self, name: str | None = None) -> "TwinCritic":
        twin = object.__new__(TwinCritic)
        twin.name = name or self.name
        twin.q1 = self.q1.clone(f"{twin.name}.q1")
        twin.q2 = self.q2.clone(f"{twin.name}.q2")
        return twin


# ────────── losses ───────────────────────────────────────────────────
def td_target(batch: Batch, target_actor, target_critic: TwinCritic, *, gamma: float,
              kappa: float, reward_scale: float, rng: np.random.Generator) -> np.ndarray:
    next_action, next_log_prob = target_actor.sample_with_log_prob(batch.next_states, rng)
    next_q = target_critic.min_q(batch.next_states, next_action.data).data
    soft = next_q - kappa * next_log_prob.data
    return batch.rewards * reward_scale + gamma * (1.0 - batch.dones) * soft


def critic_update(batch: Batch, critic: TwinCritic, target_critic: TwinCritic, target_actor,
                  optimizer: Adam, *, gamma: float, kappa: float, rng: np.random.Generator,
                  reward_scale: float = 1.0) -> float:
    y = td_target(batch, target_actor, target_critic, gamma=gamma, kappa=kappa,
                  reward_scale=reward_scale, rng=rng)
    q1, q2 = critic(batch.states, batch.actions)
    e1, e2 = q1 - y, q2 - y
    loss = (e1 * e1).mean() + (e2 * e2).mean()
    optimizer.zero_grad()
    loss.backward()
    optimizer.step()
    return loss.item()


def actor_update(states: np.ndarray, actor, q_fn: QFunction, optimizer: Adam, *,
                 kappa: float, rng: np.random.Generator, sign: str = "standard",
                 row_masks: Mapping[str, np.ndarray] | None = None) -> float:
    """One gradient step on the entropy-regularised actor loss.

    `q_fn(states, actions)` returns the (B, 1) critic value; critic
    parameters may collect gradients here but are never stepped.
    """
    if sign not in ACTOR_SIGNS:
        raise ValueError(f"actor sign must be one of {ACTOR_SIGNS}, got {sign!r}")
    action, log_prob = actor.sample_with_log_prob(states, rng)
    q = q_fn(states, action)
    if sign == "standard":
        loss = (log_prob * kappa - q).mean()
    else:
        loss = -(q + log_prob * kappa).mean()
    optimizer.zero_grad()
    loss.backward()
    optimizer.step(row_masks)
    return loss.item()


def soft_update(online, target, tau: float) -> None:
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must be in [0, 1], got {tau}")
    src, dst = online.parameters(), target.parameters()
    if len(src) != len(dst):
        raise ValueError("online and target networks differ in structure")
    for p, q in zip(src, dst):
        if p.data.shape != q.data.shape:
            raise ValueError(f"shape mismatch {p.name} {p.data.shape} vs {q.name} {q.data.shape}")
        q.data = tau * p.data + (1.0 - tau) * q.data
