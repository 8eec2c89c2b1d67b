# NN/Optim.py
# Adam with decoupled weight decay; optional per-row masks freeze pruned
# neurons (their parameter delta is exactly zero).

from __future__ import annotations

from typing import Iterable, Mapping

import numpy as np

from NN.Autodiff import NonFiniteError, Tensor


class Adam:
    def __init__(self, params: Iterable[Tensor], lr: float,
                 betas: tuple[float, float] = (0.9, 0.999), eps: float = 1e-8,
                 weight_decay: float = 0.0) -> None:
        if lr < 0 or weight_decay < 0:
            raise ValueError(f"lr and weight_decay must be ≥ 0, got {lr}, {weight_decay}")
        self.params = list(params)
        self.lr = lr
        self.betas = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.t = 0
        self._m = [np.zeros_like(p.data) for p in self.params]
        self._v = [np.zeros_like(p.data) for p in self.params]

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()

    def step(self, row_masks: Mapping[str, np.ndarray] | None = None) -> None:
        for p in self.params:
            if p.grad is not None and not np.isfinite(p.grad).all():
                raise NonFiniteError(f"non-finite gradient for {p.name}")
        self.t += 1
        b1, b2 = self.betas
        for p, m, v in zip(self.params, self._m, self._v):
            grad = np.zeros_like(p.data) if p.grad is None else p.grad
            m *= b1
            m += (1.0 - b1) * grad
            v *= b2
            v += (1.0 - b2) * grad * grad
            m_hat = m / (1.0 - b1 ** self.t)
            v_hat = v / (1.0 - b2 ** self.t)
            delta = -self.lr * (m_hat / (np.sqrt(v_hat) + self.eps) + self.weight_decay * p.data)
            mask = None if row_masks is None else row_masks.get(p.name)
            if mask is not None:
                delta = delta * mask.reshape((-1,) + (1,) * (p.data.ndim - 1))
            p.data = p.data + delta
