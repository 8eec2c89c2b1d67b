# AI/GaussianActor.py
# Tanh-squashed Gaussian actor for the plain SAC baseline.

from __future__ import annotations

import math
from typing import Mapping

import numpy as np

from NN.Autodiff import Tensor, as_tensor, clip, exp, log, tanh
from NN.Layers import Mlp, MlpSpec

LOG_STD_MIN, LOG_STD_MAX = -20.0, 2.0
SQUASH_EPS = 1e-6


class GaussianActor:
    def __init__(self, state_dim: int, action_dim: int, rng: np.random.Generator, *,
                 hidden: int = 256, depth: int = 2, name: str = "actor") -> None:
        self.state_dim = state_dim
        self.action_dim = action_dim
        self.name = name
        spec = MlpSpec((state_dim,) + (hidden,) * depth + (2 * action_dim,))
        self.net = Mlp(spec, rng, name)

    def parameters(self) -> list[Tensor]:
        return self.net.parameters()

    def state_dict(self) -> dict[str, np.ndarray]:
        return self.net.state_dict()

    def load_state_dict(self, arrays: Mapping[str, np.ndarray]) -> None:
        self.net.load_state_dict(arrays)

    def clone(self, name: str | None = None) -> "GaussianActor":
        twin = object.__new__(GaussianActor)
        twin.state_dim, twin.action_dim = self.state_dim, self.action_dim
        twin.name = name or self.name
        twin.net = self.net.clone(twin.name)
        return twin

    def _head(self, states) -> tuple[Tensor, Tensor]:
        out = self.net(np.atleast_2d(np.asarray(states, dtype=np.float64)))
        d = self.action_dim
        return out[:, :d], clip(out[:, d:], LOG_STD_MIN, LOG_STD_MAX)

    def sample_with_log_prob(self, states, rng: np.random.Generator,
                             noise: bool = True) -> tuple[Tensor, Tensor]:
        mean, log_std = self._head(states)
        xi = rng.standard_normal(mean.shape) if noise else np.zeros(mean.shape)
        action = tanh(mean + exp(log_std) * xi)
        gauss = (log_std * -1.0 - 0.5 * math.log(2.0 * math.pi)) + as_tensor(-0.5 * xi * xi)
        correction = log(1.0 - action * action + SQUASH_EPS)
        return action, (gauss - correction).sum(axis=1, keepdims=True)

    def act(self, states, rng: np.random.Generator, noise: bool = True) -> np.ndarray:
        return self.sample_with_log_prob(states, rng, noise)[0].data
