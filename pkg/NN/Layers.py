# NN/Layers.py
# ======================================================================
# Dense building blocks on top of NN.Autodiff:
#   Linear              y = x·Wᵀ + b,  W shaped (out, in) so rows = neurons
#   Mlp / MlpSpec       stack of Linear + activation
#   sinusoidal_embed    step-index embedding for the denoiser
#   forward / backward  functional entry points used by the trainers
# ======================================================================

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from NN.Autodiff import Tensor, as_tensor, mish, parameter, tanh

ACTIVATIONS: dict[str, Callable[[Tensor], Tensor]] = {
    "mish": mish,
    "tanh": tanh,
    "identity": lambda x: x,
}


class Linear:
    """Dense layer with Xavier-uniform weights and zero bias.

    `row_mask` (when set) multiplies weight rows and bias entries on every
    forward pass, so masked neurons output zero and get zero gradient.
    """

    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator,
                 name: str = "linear") -> None:
        if n_in < 1 or n_out < 1:
            raise ValueError(f"layer {name}: widths must be ≥ 1, got {n_in}→{n_out}")
        limit = math.sqrt(6.0 / (n_in + n_out))
        self.name = name
        self.weight = parameter(rng.uniform(-limit, limit, size=(n_out, n_in)), f"{name}.weight")
        self.bias = parameter(np.zeros(n_out), f"{name}.bias")
        self.row_mask: np.ndarray | None = None

    @classmethod
    def from_arrays(cls, weight: np.ndarray, bias: np.ndarray, name: str) -> "Linear":
        weight = np.asarray(weight, dtype=np.float64)
        bias = np.asarray(bias, dtype=np.float64)
        if weight.ndim != 2 or bias.shape != (weight.shape[0],):
            raise ValueError(f"layer {name}: weight {weight.shape} and bias {bias.shape} disagree")
        layer = cls.__new__(cls)
        layer.name = name
        layer.weight = parameter(weight, f"{name}.weight")
        layer.bias = parameter(bias, f"{name}.bias")
        layer.row_mask = None
        return layer

    @property
    def rows(self) -> int:
        return self.weight.data.shape[0]

    @property
    def n_in(self) -> int:
        return self.weight.data.shape[1]

    def effective(self) -> tuple[Tensor, Tensor]:
        if self.row_mask is None:
            return self.weight, self.bias
        return self.weight * self.row_mask[:, None], self.bias * self.row_mask

    def __call__(self, x) -> Tensor:
        weight, bias = self.effective()
        return as_tensor(x) @ weight.T + bias

    def parameters(self) -> list[Tensor]:
        return [self.weight, self.bias]


# ────────── multi-layer perceptron ───────────────────────────────────
@dataclass(frozen=True)
class MlpSpec:
    widths: tuple[int, ...]                 # (input, hidden…, output)
    hidden_activation: str = "mish"
    output_activation: str = "identity"

    def __post_init__(self) -> None:
        if len(self.widths) < 3:
            raise ValueError("an MLP needs an input, ≥ 1 hidden layer and an output width")
        if any(w < 1 for w in self.widths):
            raise ValueError(f"widths must be ≥ 1, got {self.widths}")
        for act in (self.hidden_activation, self.output_activation):
            if act not in ACTIVATIONS:
                raise ValueError(f"unknown activation {act!r}")


class Mlp:
    def __init__(self, spec: MlpSpec, rng: np.random.Generator, name: str = "mlp") -> None:
        self.spec = spec
        self.name = name
        self.layers = [
            Linear(n_in, n_out, rng, f"{name}.{i}")
            for i, (n_in, n_out) in enumerate(zip(spec.widths[:-1], spec.widths[1:]))
        ]

    def __call__(self, x) -> Tensor:
        h = as_tensor(x)
        last = len(self.layers) - 1
        for i, layer in enumerate(self.layers):
            act = self.spec.output_activation if i == last else self.spec.hidden_activation
            h = ACTIVATIONS[act](layer(h))
        return h

    def parameters(self) -> list[Tensor]:
        return [p for layer in self.layers for p in layer.parameters()]

    def state_dict(self) -> dict[str, np.ndarray]:
        return state_dict(self)

    def load_state_dict(self, arrays: Mapping[str, np.ndarray]) -> None:
        load_state_dict(self, arrays)

    def clone(self, name: str | None = None) -> "Mlp":
        twin = Mlp(self.spec, np.random.default_rng(0), name or self.name)
        for mine, theirs in zip(twin.parameters(), self.parameters()):
            mine.data = theirs.data.copy()
        return twin


# ────────── step embedding ───────────────────────────────────────────
def sinusoidal_embed(m, width: int) -> np.ndarray:
    """[sin(m·f₀), cos(m·f₀), sin(m·f₁), …] with f_i = 10000^(−i/half)."""
    if width < 2 or width % 2:
        raise ValueError(f"embedding width must be even and ≥ 2, got {width}")
    m = np.asarray(m, dtype=np.float64)
    if (m < 0).any():
        raise ValueError("step index must be ≥ 0")
    half = width // 2
    freqs = np.exp(-math.log(10000.0) * np.arange(half) / half)
    args = m[..., None] * freqs
    out = np.empty(args.shape[:-1] + (width,))
    out[..., 0::2] = np.sin(args)
    out[..., 1::2] = np.cos(args)
    return out


# ────────── functional helpers ───────────────────────────────────────
def forward(net, x) -> Tensor:
    return net(x)


def backward(net, loss: Tensor) -> dict[str, np.ndarray]:
    """Fresh gradients of `loss` w.r.t. every parameter of `net`."""
    params = net.parameters()
    for p in params:
        p.zero_grad()
    loss.backward()
    return {p.name: (np.zeros_like(p.data) if p.grad is None else p.grad) for p in params}


def state_dict(net) -> dict[str, np.ndarray]:
    return {p.name: p.data.copy() for p in net.parameters()}


def load_state_dict(net, arrays: Mapping[str, np.ndarray]) -> None:
    for p in net.parameters():
        if p.name not in arrays:
            raise KeyError(f"missing parameter {p.name}")
        value = np.asarray(arrays[p.name], dtype=np.float64)
        if value.shape != p.data.shape:
            raise ValueError(f"{p.name}: expected shape {p.data.shape}, got {value.shape}")
        p.data = value.copy()
