import numpy as np
import pytest

from NN.Autodiff import (
    NonFiniteError,
    Tensor,
    check_finite,
    clip,
    concat,
    exp,
    log,
    minimum,
    mish,
    parameter,
    softplus,
    tanh,
)
from NN.Layers import Linear, Mlp, MlpSpec, backward, forward, sinusoidal_embed
from NN.Optim import Adam
from NN.Persistence import load_params, save_params


def numeric_grad(fn, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    grad = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        up, down = x.copy(), x.copy()
        up[idx] += h
        down[idx] -= h
        grad[idx] = (fn(up) - fn(down)) / (2 * h)
    return grad


UNARY = {
    "tanh": tanh,
    "exp": exp,
    "softplus": softplus,
    "mish": mish,
    "log": lambda t: log(t * t + 1.0),
    "pow": lambda t: t ** 3,
    "div": lambda t: 1.0 / (t * t + 2.0),
}


# ────────── autodiff ─────────────────────────────────────────────────
@pytest.mark.parametrize("name", sorted(UNARY))
def test_unary_gradients(name):
    op = UNARY[name]
    x0 = np.random.default_rng(0).normal(size=(3, 2))
    x = parameter(x0)
    op(x).sum().backward()
    expected = numeric_grad(lambda v: op(Tensor(v)).data.sum(), x0)
    np.testing.assert_allclose(x.grad, expected, rtol=1e-5, atol=1e-7)


def test_matmul_broadcast_and_mean_gradients():
    rng = np.random.default_rng(1)
    a0, w0, b0 = rng.normal(size=(4, 3)), rng.normal(size=(2, 3)), rng.normal(size=2)
    a, w, b = parameter(a0), parameter(w0), parameter(b0)
    ((a @ w.T + b) ** 2).mean().backward()

    def loss(a_, w_, b_):
        return ((a_ @ w_.T + b_) ** 2).mean()

    np.testing.assert_allclose(w.grad, numeric_grad(lambda v: loss(a0, v, b0), w0), rtol=1e-5, atol=1e-8)
    np.testing.assert_allclose(b.grad, numeric_grad(lambda v: loss(a0, w0, v), b0), rtol=1e-5, atol=1e-8)
    np.testing.assert_allclose(a.grad, numeric_grad(lambda v: loss(v, w0, b0), a0), rtol=1e-5, atol=1e-8)


def test_concat_indexing_and_clip_gradients():
    x = parameter([[0.5, 2.0], [-3.0, 0.1]])
    y = parameter([[1.0], [2.0]])
    out = concat([clip(x, -1.0, 1.0), y * 2.0], axis=1)
    out[:, 1:].sum().backward()
    np.testing.assert_array_equal(x.grad, [[0.0, 0.0], [0.0, 1.0]])
    np.testing.assert_array_equal(y.grad, [[2.0], [2.0]])


def test_minimum_routes_gradient():
    a, b = parameter([1.0, 5.0]), parameter([3.0, 2.0])
    minimum(a, b).sum().backward()
    np.testing.assert_array_equal(a.grad, [1.0, 0.0])
    np.testing.assert_array_equal(b.grad, [0.0, 1.0])


def test_shared_node_accumulates():
    x = parameter(3.0)
    (x * x + x).backward()
    assert x.grad == pytest.approx(7.0)


def test_numpy_on_the_left_keeps_the_graph():
    x = parameter([1.0, 2.0])
    (np.array([2.0, 3.0]) * x).sum().backward()
    np.testing.assert_array_equal(x.grad, [2.0, 3.0])


def test_non_finite_loss_raises():
    x = parameter([0.0])
    with pytest.raises(NonFiniteError):
        log(x).sum().backward()
    with pytest.raises(NonFiniteError):
        check_finite(np.array([np.nan]), "nan input")


def test_backward_needs_scalar():
    with pytest.raises(ValueError):
        (parameter([1.0, 2.0]) * 2.0).backward()


# ────────── layers ───────────────────────────────────────────────────
def test_linear_xavier_bounds():
    layer = Linear(30, 20, np.random.default_rng(0))
    assert np.abs(layer.weight.data).max() <= np.sqrt(6.0 / 50.0)
    assert not layer.bias.data.any()
    assert layer.weight.data.shape == (20, 30)


def test_row_mask_zeroes_outputs_and_gradients():
    layer = Linear(3, 4, np.random.default_rng(0))
    layer.bias.data = np.ones(4)
    layer.row_mask = np.array([1.0, 0.0, 1.0, 0.0])
    out = layer(np.ones((2, 3)))
    assert not out.data[:, [1, 3]].any()
    out.sum().backward()
    assert not layer.weight.grad[[1, 3]].any()
    assert layer.weight.grad[[0, 2]].all()


def test_mlp_functional_helpers_and_clone():
    net = Mlp(MlpSpec((3, 8, 2)), np.random.default_rng(0), "q")
    x = np.random.default_rng(1).normal(size=(5, 3))
    grads = backward(net, (forward(net, x) ** 2).mean())
    assert set(grads) == {"q.0.weight", "q.0.bias", "q.1.weight", "q.1.bias"}
    twin = net.clone("q2")
    np.testing.assert_array_equal(twin(x).data, net(x).data)
    twin.parameters()[0].data += 1.0
    assert not np.array_equal(twin(x).data, net(x).data)


def test_state_dict_shape_checked():
    net = Mlp(MlpSpec((3, 4, 1)), np.random.default_rng(0), "m")
    arrays = net.state_dict()
    arrays["m.0.weight"] = np.zeros((2, 2))
    with pytest.raises(ValueError):
        net.load_state_dict(arrays)
    del arrays["m.0.weight"]
    with pytest.raises(KeyError):
        net.load_state_dict(arrays)


def test_mlp_spec_validation():
    with pytest.raises(ValueError):
        MlpSpec((3, 1))
    with pytest.raises(ValueError):
        MlpSpec((3, 4, 1), hidden_activation="relu6")


def test_sinusoidal_embed():
    emb = sinusoidal_embed(np.array([0.0, 3.0]), 16)
    assert emb.shape == (2, 16)
    np.testing.assert_allclose(emb[0, 0::2], 0.0)
    np.testing.assert_allclose(emb[0, 1::2], 1.0)
    assert emb[1, 0] == pytest.approx(np.sin(3.0))
    with pytest.raises(ValueError):
        sinusoidal_embed(1.0, 7)


# ────────── optimizer ────────────────────────────────────────────────
def test_adam_minimises_a_quadratic():
    x = parameter([5.0, -3.0], "x")
    opt = Adam([x], lr=0.1)
    for _ in range(500):
        opt.zero_grad()
        (x * x).sum().backward()
        opt.step()
    np.testing.assert_allclose(x.data, 0.0, atol=5e-2)


def test_adam_row_mask_freezes_rows():
    w = parameter(np.ones((3, 2)), "w")
    before = w.data.copy()
    opt = Adam([w], lr=0.1, weight_decay=0.01)
    opt.zero_grad()
    (w * w).sum().backward()
    opt.step({"w": np.array([1.0, 0.0, 1.0])})
    np.testing.assert_array_equal(w.data[1], before[1])
    assert (w.data[[0, 2]] < before[[0, 2]]).all()


def test_adam_rejects_non_finite_gradient():
    x = parameter([1.0], "x")
    x.grad = np.array([np.inf])
    with pytest.raises(NonFiniteError):
        Adam([x], lr=0.1).step()


# ────────── persistence ──────────────────────────────────────────────
def test_params_file_round_trip(tmp_path):
    arrays = {"a.weight": np.arange(6.0).reshape(2, 3), "a.bias": np.zeros(2)}
    path = save_params(tmp_path / "p.npz", arrays, {"variant": "edmsac", "hidden": 4})
    loaded, meta = load_params(path)
    assert meta == {"variant": "edmsac", "hidden": 4}
    np.testing.assert_array_equal(loaded["a.weight"], arrays["a.weight"])


def test_params_file_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_params(tmp_path / "missing.npz")
    with pytest.raises(ValueError):
        save_params(tmp_path / "p.npz", {"__meta__": np.zeros(1)})
    foreign = tmp_path / "foreign.npz"
    with foreign.open("wb") as fh:
        np.savez(fh, x=np.zeros(2))
    with pytest.raises(ValueError):
        load_params(foreign)
