# AI/Diffusion.py
# ======================================================================
# Diffusion-model actor.
#
#   vp_schedule       variance-proportional noise levels ε₁ < … < ε_M
#   DiffusionPolicy   denoiser ε̂(Ã_m, m, S) + reverse chain Ã_M → Ã₀
#   sample_action     one state → (Ã₀, per-step trace)
#   log_prob_approx   Gaussian density of Ã₀ around the final-step mean
#
# Denoiser layout (rows = output neurons):
#   time_in   16 → 32   mish        time_out  32 → 16
#   hidden_0  [Ã_m | t_emb | S] → H  mish      hidden_i  H → H  mish
#   out       H → d     tanh
# ======================================================================

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from NN.Autodiff import Tensor, as_tensor, check_finite, clip, concat, log, mish, tanh
from NN.Layers import Linear, load_state_dict, sinusoidal_embed, state_dict

logger = logging.getLogger(__name__)

SQUASH_EPS = 1e-6


@dataclass(frozen=True, eq=False)
class NoiseSchedule:
    eps: np.ndarray

    def __post_init__(self) -> None:
        eps = np.asarray(self.eps, dtype=np.float64)
        if eps.ndim != 1 or eps.size < 1:
            raise ValueError("noise schedule needs at least one step")
        if not ((eps > 0) & (eps < 1)).all():
            raise ValueError("every ε_m must lie in (0, 1)")
        if (np.diff(eps) < 0).any():
            raise ValueError("ε_m must be non-decreasing in m")
        object.__setattr__(self, "eps", eps)

    @property
    def steps(self) -> int:
        return self.eps.size

    @property
    def zeta(self) -> np.ndarray:
        """Reverse-process noise levels (identified with ε)."""
        return self.eps

    @property
    def chi(self) -> np.ndarray:
        return 1.0 - self.eps

    @property
    def chi_bar(self) -> np.ndarray:
        return np.cumprod(self.chi)

    @property
    def chi_bar_prev(self) -> np.ndarray:
        return np.concatenate([[1.0], self.chi_bar[:-1]])

    @property
    def posterior_coeffs(self) -> tuple[np.ndarray, np.ndarray]:
        """(c1, c2) of the posterior mean c1·Â₀ + c2·Ã_m."""
        cb, cb_prev = self.chi_bar, self.chi_bar_prev
        c1 = np.sqrt(cb_prev) * self.zeta / (1.0 - cb)
        c2 = np.sqrt(self.chi) * (1.0 - cb_prev) / (1.0 - cb)
        return c1, c2


def vp_schedule(steps: int, eps_min: float = 0.1, eps_max: float = 10.0) -> NoiseSchedule:
    if steps < 1:
        raise ValueError(f"denoising steps must be ≥ 1, got {steps}")
    if not 0 < eps_min <= eps_max:
        raise ValueError(f"need 0 < eps_min ≤ eps_max, got {eps_min}, {eps_max}")
    m = np.arange(1, steps + 1, dtype=np.float64)
    eps = 1.0 - np.exp(-eps_min / steps - (2 * m - 1) / (2 * steps ** 2) * (eps_max - eps_min))
    schedule = NoiseSchedule(eps)
    if schedule.chi_bar[-1] > 0.2:
        logger.warning("[Diffusion] χ̄_M = %.3f > 0.2: the chain does not start from near-pure noise",
                     schedule.chi_bar[-1])
    return schedule


# ────────── policy ───────────────────────────────────────────────────
class DiffusionPolicy:
    def __init__(self, state_dim: int, action_dim: int, schedule: NoiseSchedule,
                 rng: np.random.Generator, *, hidden: int = 256, depth: int = 2,
                 time_dim: int = 16, clip_denoised: bool = True, name: str = "actor") -> None:
        if depth < 1:
            raise ValueError("the denoiser needs at least one hidden layer")
        self.state_dim = state_dim
        self.action_dim = action_dim
        self.schedule = schedule
        self.clip_denoised = clip_denoised
        self.name = name
        layers = {
            "time_in": Linear(time_dim, 2 * time_dim, rng, f"{name}.time_in"),
            "time_out": Linear(2 * time_dim, time_dim, rng, f"{name}.time_out"),
        }
        width = action_dim + time_dim + state_dim
        for i in range(depth):
            layers[f"hidden_{i}"] = Linear(width, hidden, rng, f"{name}.hidden_{i}")
            width = hidden
        layers["out"] = Linear(width, action_dim, rng, f"{name}.out")
        self.layers: dict[str, Linear] = layers

    # ── structure ────────────────────────────────────────────────────
    @property
    def time_dim(self) -> int:
        return self.layers["time_in"].n_in

    @property
    def depth(self) -> int:
        return sum(1 for key in self.layers if key.startswith("hidden_"))

    def prunable_layers(self) -> dict[str, Linear]:
        return {key: layer for key, layer in self.layers.items() if key != "out"}

    def consumers(self) -> dict[str, tuple[str, int]]:
        """layer → (layer reading its output, first input column it occupies)."""
        links = {"time_in": ("time_out", 0), "time_out": ("hidden_0", self.action_dim)}
        for i in range(self.depth):
            nxt = f"hidden_{i + 1}" if i + 1 < self.depth else "out"
            links[f"hidden_{i}"] = (nxt, 0)
        return links

    def parameters(self) -> list[Tensor]:
        return [p for layer in self.layers.values() for p in layer.parameters()]

    def state_dict(self) -> dict[str, np.ndarray]:
        return state_dict(self)

    def load_state_dict(self, arrays: Mapping[str, np.ndarray]) -> None:
        load_state_dict(self, arrays)

    def with_layers(self, layers: dict[str, Linear], name: str | None = None) -> "DiffusionPolicy":
        twin = object.__new__(DiffusionPolicy)
        twin.state_dim, twin.action_dim = self.state_dim, self.action_dim
        twin.schedule, twin.clip_denoised = self.schedule, self.clip_denoised
        twin.name = name or self.name
        twin.layers = dict(layers)
        return twin

    def clone(self, name: str | None = None) -> "DiffusionPolicy":
        name = name or self.name
        layers = {}
        for key, layer in self.layers.items():
            copy = Linear.from_arrays(layer.weight.data.copy(), layer.bias.data.copy(),
                                      f"{name}.{key}")
            copy.row_mask = None if layer.row_mask is None else layer.row_mask.copy()
            layers[key] = copy
        return self.with_layers(layers, name)

    @classmethod
    def from_arrays(cls, arrays: Mapping[str, np.ndarray], *, state_dim: int, action_dim: int,
                    schedule: NoiseSchedule, clip_denoised: bool = True,
                    name: str = "actor") -> "DiffusionPolicy":
        """Rebuild a (possibly compacted) policy; layer shapes come from the arrays."""
        keys = sorted({k.rsplit(".", 2)[-2] for k in arrays})
        order = ["time_in", "time_out"] + sorted(
            (k for k in keys if k.startswith("hidden_")), key=lambda k: int(k.split("_")[1])
        ) + ["out"]
        if set(order) != set(keys):
            raise ValueError(f"unexpected denoiser layers {keys}")
        layers = {
            key: Linear.from_arrays(arrays[f"{name}.{key}.weight"], arrays[f"{name}.{key}.bias"],
                                    f"{name}.{key}")
            for key in order
        }
        base = object.__new__(cls)
        base.state_dim, base.action_dim = state_dim, action_dim
        base.schedule, base.clip_denoised, base.name = schedule, clip_denoised, name
        base.layers = layers
        return base

    # ── denoiser ─────────────────────────────────────────────────────
    def denoise(self, x, m, states) -> Tensor:
        """ε̂(Ã_m, m, S); `m` is a scalar step or one step per row."""
        x = as_tensor(x)
        states = np.atleast_2d(np.asarray(states, dtype=np.float64))
        batch = x.shape[0]
        steps = np.broadcast_to(np.asarray(m, dtype=np.float64), (batch,))
        emb = sinusoidal_embed(steps, self.time_dim)
        t = self.layers["time_out"](mish(self.layers["time_in"](emb)))
        h = concat([x, t, np.broadcast_to(states, (batch, states.shape[1]))], axis=1)
        for i in range(self.depth):
            h = mish(self.layers[f"hidden_{i}"](h))
        return tanh(self.layers["out"](h))

    def _reverse_step(self, x: Tensor, m: int, states: np.ndarray) -> Tensor:
        """Mean of Ã_{m−1} given Ã_m (no noise term)."""
        s = self.schedule
        i = m - 1
        eps_hat = self.denoise(x, m, states)
        zeta, chi, chi_bar = s.zeta[i], s.chi[i], s.chi_bar[i]
        if self.clip_denoised:
            c1, c2 = s.posterior_coeffs
            x0 = clip((x - math.sqrt(1.0 - chi_bar) * eps_hat) / math.sqrt(chi_bar), -1.0, 1.0)
            return x0 * c1[i] + x * c2[i]
        return x / math.sqrt(chi) - eps_hat * (zeta / math.sqrt(chi * (1.0 - chi_bar)))

    def _chain(self, states: np.ndarray, rng: np.random.Generator, noise: bool,
               trace: list | None = None) -> tuple[Tensor, Tensor]:
        """Run Ã_M → Ã₀; returns (final-step mean μ₁, clamped Ã₀)."""
        states = np.atleast_2d(np.asarray(states, dtype=np.float64))
        x = as_tensor(rng.standard_normal((states.shape[0], self.action_dim)))
        mean = x
        for m in range(self.schedule.steps, 0, -1):
            mean = self._reverse_step(x, m, states)
            x = mean
            if noise and m > 1:
                x = x + math.sqrt(self.schedule.zeta[m - 1]) * rng.standard_normal(x.shape)
            check_finite(x, f"reverse chain step {m}")
            if trace is not None:
                trace.append(x.data.copy())
        return mean, clip(x, -1.0, 1.0)

    # ── public sampling API ──────────────────────────────────────────
    def sample(self, states, rng: np.random.Generator, noise: bool = True) -> np.ndarray:
        return self._chain(states, rng, noise)[1].data

    def sample_with_log_prob(self, states, rng: np.random.Generator,
                             noise: bool = True) -> tuple[Tensor, Tensor]:
        """Differentiable Ã₀ and its approximate log-density, shape (B, 1)."""
        mean, action = self._chain(states, rng, noise)
        return action, self._gaussian_log_prob(action, mean, self.schedule.zeta[0])

    def final_mean(self, states, rng: np.random.Generator) -> np.ndarray:
        return self._chain(states, rng, noise=False)[0].data

    def log_prob(self, states, actions, rng: np.random.Generator,
                 variance: float | None = None) -> np.ndarray:
        mean, _ = self._chain(states, rng, noise=False)
        var = self.schedule.zeta[0] if variance is None else variance
        return self._gaussian_log_prob(as_tensor(np.atleast_2d(actions)), mean, var).data[:, 0]

    @staticmethod
    def _gaussian_log_prob(action: Tensor, mean: Tensor, var: float) -> Tensor:
        d = action.shape[1]
        diff = action - mean
        gauss = (diff * diff).sum(axis=1, keepdims=True) * (-0.5 / var) \
            - 0.5 * d * math.log(2.0 * math.pi * var)
        squashed = clip(mean, -1.0, 1.0)
        correction = log(1.0 - squashed * squashed + SQUASH_EPS).sum(axis=1, keepdims=True)
        return gauss - correction

    def act(self, states, rng: np.random.Generator, noise: bool = True) -> np.ndarray:
        return self.sample(states, rng, noise)

    # ── behaviour cloning ────────────────────────────────────────────
    def bc_loss(self, states, actions, rng: np.random.Generator) -> Tensor:
        """Noise-prediction loss at uniformly drawn steps."""
        actions = np.atleast_2d(np.asarray(actions, dtype=np.float64))
        batch = actions.shape[0]
        m = rng.integers(1, self.schedule.steps + 1, size=batch)
        noise = rng.standard_normal(actions.shape)
        cb = self.schedule.chi_bar[m - 1][:, None]
        noisy = np.sqrt(cb) * actions + np.sqrt(1.0 - cb) * noise
        err = self.denoise(noisy, m, states) - noise
        return (err * err).mean()


# ────────── module-level helpers ─────────────────────────────────────
def sample_action(policy: DiffusionPolicy, state_vec, rng: np.random.Generator,
                  noise: bool = True) -> tuple[np.ndarray, list[np.ndarray]]:
    state_vec = np.asarray(state_vec, dtype=np.float64)
    if state_vec.shape != (policy.state_dim,):
        raise ValueError(f"state must have shape ({policy.state_dim},), got {state_vec.shape}")
    trace: list[np.ndarray] = []
    _, action = policy._chain(state_vec[None, :], rng, noise, trace)
    return action.data[0], [step[0] for step in trace]


def log_prob_approx(policy: DiffusionPolicy, state_vec, action,
                    rng: np.random.Generator | None = None,
                    variance: float | None = None) -> float:
    """Approximate log π(Ã₀ | S); the chain starts from a seeded Ã_M when no rng is given."""
    rng = np.random.default_rng(0) if rng is None else rng
    action = np.asarray(action, dtype=np.float64)
    if action.shape != (policy.action_dim,) or np.abs(action).max() > 1.0:
        raise ValueError("action must be a vector in [−1, 1]^d")
    return float(policy.log_prob(np.asarray(state_vec)[None, :], action[None, :], rng, variance)[0])
