# AI/ReplayBuffer.py
# Fixed-capacity ring of (S, Ã₀, S', r, d) transitions with uniform sampling.

from __future__ import annotations

from typing import NamedTuple

import numpy as np


class Batch(NamedTuple):
    states: np.ndarray
    actions: np.ndarray
    next_states: np.ndarray
    rewards: np.ndarray       # (B, 1)
    dones: np.ndarray         # (B, 1), 0.0 / 1.0


class ReplayBuffer:
    def __init__(self, capacity: int, state_dim: int, action_dim: int) -> None:
        if capacity < 1:
            raise ValueError(f"buffer capacity must be ≥ 1, got {capacity}")
        self.capacity = capacity
        self.states = np.zeros((capacity, state_dim))
        self.actions = np.zeros((capacity, action_dim))
        self.next_states = np.zeros((capacity, state_dim))
        self.rewards = np.zeros((capacity, 1))
        self.dones = np.zeros((capacity, 1))
        self._cursor = 0
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def push(self, state, action, next_state, reward: float, done: bool) -> None:
        values = (np.asarray(state, dtype=np.float64), np.asarray(action, dtype=np.float64),
                  np.asarray(next_state, dtype=np.float64), float(reward))
        if not all(np.isfinite(v).all() for v in values):
            raise ValueError("transition contains non-finite entries")
        i = self._cursor
        self.states[i], self.actions[i], self.next_states[i], self.rewards[i, 0] = values
        self.dones[i, 0] = 1.0 if done else 0.0
        self._cursor = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def sample_indices(self, batch_size: int, rng: np.random.Generator) -> np.ndarray:
        if self._size == 0:
            raise ValueError("cannot sample from an empty buffer")
        return rng.integers(0, self._size, size=batch_size)

    def sample(self, batch_size: int, rng: np.random.Generator) -> Batch:
        idx = self.sample_indices(batch_size, rng)
        return Batch(self.states[idx], self.actions[idx], self.next_states[idx],
                     self.rewards[idx], self.dones[idx])
