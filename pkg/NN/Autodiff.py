# NN/Autodiff.py
# ======================================================================
# Reverse-mode automatic differentiation over numpy float64 arrays.
#
# Each operation builds a node holding its parents and a `_backward`
# closure that pushes the node's gradient into the parents; `backward()`
# walks the graph in reverse topological order.  Nodes whose inputs need
# no gradient are plain constants (no graph is kept).
# ======================================================================

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np


class NonFiniteError(RuntimeError):
    """A loss, gradient or intermediate value became NaN/inf."""


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "name")
    __array_ufunc__ = None  # numpy operands defer to the reflected operators

    def __init__(self, data, requires_grad: bool = False, name: str = "") -> None:
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[], None] | None = None
        self.name = name

    # ── plumbing ──────────────────────────────────────────────────────
    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def __repr__(self) -> str:
        return f"Tensor({self.name or 'tmp'}, shape={self.shape}, grad={self.requires_grad})"

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def _accumulate(self, grad: np.ndarray) -> None:
        grad = _unbroadcast(grad, self.data.shape)
        self.grad = grad.copy() if self.grad is None else self.grad + grad

    @staticmethod
    def _result(data: np.ndarray, parents: Sequence["Tensor"],
                backward: Callable[["Tensor"], None]) -> "Tensor":
        out = Tensor(data)
        if any(p.requires_grad for p in parents):
            out.requires_grad = True
            out._parents = tuple(parents)
            out._backward = lambda: backward(out)
        return out

    def backward(self, grad: np.ndarray | None = None) -> None:
        if grad is None:
            if self.data.size != 1:
                raise ValueError("backward() without a seed needs a scalar output")
            if not np.isfinite(self.data).all():
                raise NonFiniteError(f"non-finite loss {self.data!r}")
            grad = np.ones_like(self.data)
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            stack.extend((p, False) for p in node._parents if p.requires_grad)
        self._accumulate(np.asarray(grad, dtype=np.float64))
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward()

    # ── arithmetic ────────────────────────────────────────────────────
    def __add__(self, other) -> "Tensor":
        other = as_tensor(other)

        def back(out: Tensor) -> None:
            if self.requires_grad:
                self._accumulate(out.grad)
            if other.requires_grad:
                other._accumulate(out.grad)
        return Tensor._result(self.data + other.data, (self, other), back)

    __radd__ = __add__

    def __neg__(self) -> "Tensor":
        return self * -1.0

    def __sub__(self, other) -> "Tensor":
        return self + (-as_tensor(other))

    def __rsub__(self, other) -> "Tensor":
        return as_tensor(other) + (-self)

    def __mul__(self, other) -> "Tensor":
        other = as_tensor(other)

        def back(out: Tensor) -> None:
            if self.requires_grad:
                self._accumulate(out.grad * other.data)
            if other.requires_grad:
                other._accumulate(out.grad * self.data)
        return Tensor._result(self.data * other.data, (self, other), back)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Tensor":
        other = as_tensor(other)

        def back(out: Tensor) -> None:
            if self.requires_grad:
                self._accumulate(out.grad / other.data)
            if other.requires_grad:
                other._accumulate(-out.grad * self.data / other.data ** 2)
        return Tensor._result(self.data / other.data, (self, other), back)

    def __rtruediv__(self, other) -> "Tensor":
        return as_tensor(other) / self

    def __pow__(self, exponent: float) -> "Tensor":
        def back(out: Tensor) -> None:
            self._accumulate(out.grad * exponent * self.data ** (exponent - 1))
        return Tensor._result(self.data ** exponent, (self,), back)

    def __matmul__(self, other) -> "Tensor":
        other = as_tensor(other)

        def back(out: Tensor) -> None:
            if self.requires_grad:
                self._accumulate(out.grad @ other.data.T)
            if other.requires_grad:
                other._accumulate(self.data.T @ out.grad)
        return Tensor._result(self.data @ other.data, (self, other), back)

    @property
    def T(self) -> "Tensor":
        def back(out: Tensor) -> None:
            self._accumulate(out.grad.T)
        return Tensor._result(self.data.T, (self,), back)

    def __getitem__(self, index) -> "Tensor":
        def back(out: Tensor) -> None:
            full = np.zeros_like(self.data)
            np.add.at(full, index, out.grad)
            self._accumulate(full)
        return Tensor._result(self.data[index], (self,), back)

    # ── reductions ────────────────────────────────────────────────────
    def sum(self, axis: int | None = None, keepdims: bool = False) -> "Tensor":
        def back(out: Tensor) -> None:
            grad = out.grad
            if axis is not None and not keepdims:
                grad = np.expand_dims(grad, axis)
            self._accumulate(np.broadcast_to(grad, self.data.shape))
        return Tensor._result(self.data.sum(axis=axis, keepdims=keepdims), (self,), back)

    def mean(self, axis: int | None = None, keepdims: bool = False) -> "Tensor":
        count = self.data.size if axis is None else self.data.shape[axis]
        return self.sum(axis=axis, keepdims=keepdims) / float(count)


def as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def parameter(data, name: str = "") -> Tensor:
    return Tensor(np.array(data, dtype=np.float64, copy=True), requires_grad=True, name=name)


# ────────── element-wise functions ───────────────────────────────────
def tanh(x: Tensor) -> Tensor:
    y = np.tanh(x.data)

    def back(out: Tensor) -> None:
        x._accumulate(out.grad * (1.0 - y ** 2))
    return Tensor._result(y, (x,), back)


def exp(x: Tensor) -> Tensor:
    y = np.exp(x.data)

    def back(out: Tensor) -> None:
        x._accumulate(out.grad * y)
    return Tensor._result(y, (x,), back)


def log(x: Tensor) -> Tensor:
    def back(out: Tensor) -> None:
        x._accumulate(out.grad / x.data)
    return Tensor._result(np.log(x.data), (x,), back)


def softplus(x: Tensor) -> Tensor:
    y = np.logaddexp(0.0, x.data)

    def back(out: Tensor) -> None:
        x._accumulate(out.grad / (1.0 + np.exp(-x.data)))
    return Tensor._result(y, (x,), back)


def mish(x: Tensor) -> Tensor:
    """x · tanh(softplus(x))"""
    return x * tanh(softplus(x))


def clip(x: Tensor, low: float, high: float) -> Tensor:
    inside = (x.data >= low) & (x.data <= high)

    def back(out: Tensor) -> None:
        x._accumulate(out.grad * inside)
    return Tensor._result(np.clip(x.data, low, high), (x,), back)


def minimum(a: Tensor, b: Tensor) -> Tensor:
    pick_a = a.data <= b.data

    def back(out: Tensor) -> None:
        if a.requires_grad:
            a._accumulate(out.grad * pick_a)
        if b.requires_grad:
            b._accumulate(out.grad * ~pick_a)
    return Tensor._result(np.minimum(a.data, b.data), (a, b), back)


def concat(parts: Iterable[Tensor], axis: int = -1) -> Tensor:
    parts = [as_tensor(p) for p in parts]
    sizes = [p.data.shape[axis] for p in parts]
    cuts = np.cumsum(sizes)[:-1]

    def back(out: Tensor) -> None:
        for part, grad in zip(parts, np.split(out.grad, cuts, axis=axis)):
            if part.requires_grad:
                part._accumulate(grad)
    return Tensor._result(np.concatenate([p.data for p in parts], axis=axis), parts, back)


def check_finite(x: Tensor | np.ndarray, what: str) -> None:
    data = x.data if isinstance(x, Tensor) else x
    if not np.isfinite(data).all():
        raise NonFiniteError(f"non-finite values in {what}")
