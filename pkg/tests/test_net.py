import numpy as np
import pytest
from hypothesis import given, strategies as st

from ritzpinn import autodiff as ad
from ritzpinn.errors import ConfigurationError, NumericalError
from ritzpinn.jets import sin
from ritzpinn.net import (Ansatz, Network, NetworkConfig, ParamLayout, RFFConfig, forward,
                          forward_jet, grad_params, init_glorot, rff_embed)

PI = np.pi
CONFIGS = [NetworkConfig(input_dim=d, width=w, depth=depth, activation=act, rff=rff)
           for d in (2, 3)
           for act in ("sine", "tanh")
           for rff in (None, RFFConfig(4, 1.5, 2))
           for w, depth in ((5, 2), (35, 4))]


def _fd_jet(net, theta, x, h=1e-4):
    """Central differences of forward(): gradient (d, N) and Hessian (d, d, N)."""
    d = x.shape[1]
    f = lambda y: net.forward(theta, y)
    eye = np.eye(d) * h
    grad = np.stack([(f(x + eye[i]) - f(x - eye[i])) / (2 * h) for i in range(d)])
    hess = np.empty((d, d, len(x)))
    for i in range(d):
        for j in range(d):
            hess[i, j] = (f(x + eye[i] + eye[j]) - f(x + eye[i] - eye[j])
                          - f(x - eye[i] + eye[j]) + f(x - eye[i] - eye[j])) / (4 * h * h)
    return grad, hess


def _rel(a, b, floor=1e-8):
    """Worst per-point relative error; the leading axes hold the vector/matrix components."""
    axes = tuple(range(a.ndim - 1))
    num = np.sqrt(np.sum((a - b) ** 2, axis=axes))
    den = np.maximum(np.sqrt(np.sum(b ** 2, axis=axes)), floor)
    return np.max(num / den)


def test_parameter_count_default():
    cfg = NetworkConfig(input_dim=2, depth=4, width=35)
    assert cfg.num_params == 3921
    assert init_glorot(cfg, 7).size == 3921


@pytest.mark.parametrize("cfg", CONFIGS[:8])
def test_parameter_count_formula(cfg):
    k, w, D = cfg.embed_dim, cfg.width, cfg.depth
    assert cfg.num_params == (k * w + w) + (D - 1) * (w * w + w) + (w + 1)


def test_layout_partitions_vector():
    layout = ParamLayout(NetworkConfig(width=6, depth=3).layer_shapes())
    covered = np.zeros(layout.size, dtype=int)
    for (w0, w1), (b0, b1) in layout.offsets:
        covered[w0:w1] += 1
        covered[b0:b1] += 1
    assert np.all(covered == 1)
    slices = layout.layer_slices()
    assert slices[0].start == 0 and slices[-1].stop == layout.size


def test_glorot_bounds_and_determinism():
    cfg = NetworkConfig(width=35, depth=4)
    net = Network(cfg)
    a, b = net.init_glorot(7), net.init_glorot(7)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, net.init_glorot(8))
    for (fan_in, fan_out), (W, bias) in zip(net.layout.shapes, net.layout.unflatten(a)):
        limit = np.sqrt(6 / (fan_in + fan_out))
        assert np.all(np.abs(W) <= limit)
        assert np.all(bias == 0)


def test_glorot_unit_fan_bound():
    layout = ParamLayout([(1, 1)])
    net = Network(NetworkConfig(width=1, depth=1))
    net.layout = layout
    samples = np.concatenate([net.init_glorot(s)[:1] for s in range(200)])
    assert np.all(np.abs(samples) <= np.sqrt(3))
    assert np.max(np.abs(samples)) > 1.5


def test_config_validation():
    for kwargs in ({"input_dim": 1}, {"depth": 0}, {"width": 0}, {"activation": "relu"},
                   {"rff": RFFConfig(0)}, {"rff": RFFConfig(2, sigma=0.0)}):
        with pytest.raises(ConfigurationError):
            NetworkConfig(**kwargs)


def test_rff_embed_examples():
    assert np.array_equal(rff_embed(np.zeros((3, 2)), np.array([0.4, -2.0])),
                          [0, 0, 0, 1, 1, 1])
    out = rff_embed(np.array([[PI, 0.0]]), np.array([0.5, 123.0]))
    assert np.allclose(out, [1.0, 0.0], atol=1e-12)
    with pytest.raises(ConfigurationError):
        rff_embed(np.zeros((2, 3)), np.zeros(2))


@given(st.integers(0, 2 ** 31), st.integers(1, 6))
def test_rff_pythagorean_identity(seed, m):
    rng = np.random.default_rng(seed)
    B, x = rng.normal(0, 3, (m, 2)), rng.random(2)
    e = rff_embed(B, x)
    assert np.allclose(e[:m] ** 2 + e[m:] ** 2, 1.0, atol=1e-14)


def test_forward_zero_params():
    cfg = NetworkConfig(width=5, depth=3)
    x = np.random.default_rng(0).random((10, 2))
    assert np.all(forward(np.zeros(cfg.num_params), cfg, x) == 0)
    jet = forward_jet(np.zeros(cfg.num_params), cfg, x)
    assert np.all(jet.value == 0) and np.all(jet.gradient == 0) and np.all(jet.hessian == 0)
    assert forward(np.zeros(cfg.num_params), cfg, np.array([0.3, 0.2])) == 0.0


def test_forward_one_hidden_layer_hand_oracle():
    # identity input weights, zero biases, output weights 1: U = sin(x) + sin(y)
    cfg = NetworkConfig(width=2, depth=1)
    net = Network(cfg)
    theta = np.zeros(cfg.num_params)
    (w0, w1), _ = net.layout.offsets[0]
    theta[w0:w1] = np.eye(2).ravel()
    (v0, v1), _ = net.layout.offsets[1]
    theta[v0:v1] = 1.0
    x = np.array([[0.3, -1.2], [2.0, 0.5]])
    assert np.allclose(net.forward(theta, x), np.sin(x).sum(axis=1), atol=1e-15)
    tanh_net = Network(NetworkConfig(width=2, depth=1, activation="tanh"))
    assert np.allclose(tanh_net.forward(theta, x), np.tanh(x).sum(axis=1), atol=1e-15)


def test_ansatz_vanishes_on_boundary(rng):
    G = lambda x: x[0] * (1 - x[0]) * x[1] * (1 - x[1])
    cfg = NetworkConfig(width=5, ansatz=Ansatz(lambda x: 0.0, G))
    theta = init_glorot(cfg, 1)
    t = rng.random(1000)
    side = rng.integers(0, 4, 1000)
    pts = np.stack([np.where(side == 0, 0.0, np.where(side == 1, 1.0, t)),
                    np.where(side == 2, 0.0, np.where(side == 3, 1.0, t))], axis=1)
    assert np.max(np.abs(forward(theta, cfg, pts))) == 0.0


def test_ansatz_reproduces_boundary_data(rng):
    g = lambda x: 1.0 + x[0] * x[1]
    G = lambda x: x[0] * (1 - x[0]) * x[1] * (1 - x[1])
    cfg = NetworkConfig(width=5, ansatz=Ansatz(g, G))
    theta = init_glorot(cfg, 3)
    t = rng.random(1000)
    pts = np.stack([np.where(t < 0.5, 0.0, 1.0), rng.random(1000)], axis=1)
    assert np.max(np.abs(forward(theta, cfg, pts) - (1.0 + pts[:, 0] * pts[:, 1]))) <= 1e-12


def test_laplacian_of_ansatz_sine():
    cfg = NetworkConfig(width=5, ansatz=Ansatz(lambda x: 0.0, lambda x: sin(PI * x[0]) * sin(PI * x[1])))
    theta = np.zeros(cfg.num_params)
    theta[-1] = 1.0  # output bias: inner network == 1
    x = np.random.default_rng(3).random((50, 2))
    jet = forward_jet(theta, cfg, x)
    assert np.allclose(jet.laplacian(), -2 * PI ** 2 * jet.value, atol=1e-12)
    assert np.allclose(jet.hessian, np.swapaxes(jet.hessian, 0, 1))


@pytest.mark.parametrize("cfg", CONFIGS, ids=lambda c: f"d{c.input_dim}-{c.activation}-"
                         f"{'rff' if c.rff else 'raw'}-w{c.width}")
def test_jet_matches_finite_differences(cfg):
    """100 random (theta, x) per configuration."""
    rng = np.random.default_rng(cfg.width * 7 + cfg.input_dim)
    net = Network(cfg)
    worst_g = worst_h = 0.0
    for draw in range(10):
        theta = net.init_glorot(draw) + 0.05 * rng.standard_normal(cfg.num_params)
        x = rng.random((10, cfg.input_dim))
        jet = net.forward_jet(theta, x, 2)
        g, H = _fd_jet(net, theta, x)
        worst_g = max(worst_g, _rel(jet.gradient, g))
        worst_h = max(worst_h, _rel(jet.hessian, H))
        assert np.allclose(jet.value, net.forward(theta, x), rtol=0, atol=1e-13)
    assert worst_g <= 1e-5
    assert worst_h <= 1e-5


def test_first_order_binding_matches_second_order(rng):
    net = Network(NetworkConfig(width=6, depth=3))
    theta = net.init_glorot(0)
    x = rng.random((20, 2))
    a, b = net.forward_jet(theta, x, 1), net.forward_jet(theta, x, 2)
    assert a.hess is None
    assert np.allclose(a.gradient, b.gradient, atol=1e-15)


def _loss_functional(net, bound):
    def fn(theta):
        u = net.output(theta, bound)
        return ad.total(u.laplacian() ** 2 + 0.5 * u.grad_norm2() - ad.sin(u.value))
    return fn


@pytest.mark.parametrize("cfg", [c for c in CONFIGS if c.width == 5])
def test_grad_params_matches_finite_differences(cfg):
    rng = np.random.default_rng(5)
    net = Network(cfg)
    theta = net.init_glorot(1) + 0.1 * rng.standard_normal(cfg.num_params)
    bound = net.bind(rng.random((8, cfg.input_dim)), 2)
    fn = _loss_functional(net, bound)
    g = grad_params(theta, cfg, fn)
    h = 1e-6
    for i in rng.choice(cfg.num_params, 20, replace=False):
        e = np.zeros_like(theta)
        e[i] = h
        fd = (float(fn(theta + e)) - float(fn(theta - e))) / (2 * h)
        assert abs(g[i] - fd) <= 1e-5 * max(abs(fd), 1e-3), i


def test_grad_params_output_layer_by_hand(rng):
    """d U(x0) / d(output weights) are the last hidden activations; d/d(output bias) = 1."""
    cfg = NetworkConfig(width=4, depth=1)
    net = Network(cfg)
    theta = net.init_glorot(2)
    x0 = rng.random((1, 2))
    bound = net.bind(x0, 0)
    g = grad_params(theta, cfg, lambda t: ad.total(net.output(t, bound)))
    (W, b), _ = net.layout.unflatten(theta)
    hidden = np.sin(x0 @ W + b)[0]
    (v0, v1), (c0, c1) = net.layout.offsets[1]
    assert np.allclose(g[v0:v1], hidden, atol=1e-15)
    assert g[c0] == 1.0


def test_grad_params_constant_functional():
    cfg = NetworkConfig(width=3, depth=2)
    assert np.all(grad_params(np.ones(cfg.num_params), cfg, lambda t: 4.0) == 0)


def test_non_finite_output_reports_layer():
    cfg = NetworkConfig(width=3, depth=2)
    net = Network(cfg)
    theta = net.init_glorot(0)
    (w0, w1), _ = net.layout.offsets[1]
    theta[w0] = np.inf
    with pytest.raises(NumericalError) as info, np.errstate(invalid="ignore"):
        net.forward(theta, np.array([[0.2, 0.3]]))
    assert info.value.layer == 1


def test_bind_checks_dimension():
    net = Network(NetworkConfig(width=3))
    with pytest.raises(ConfigurationError):
        net.bind(np.zeros((4, 3)))
