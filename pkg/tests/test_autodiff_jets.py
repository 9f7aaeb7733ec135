import numpy as np
import pytest
from hypothesis import given, strategies as st

from ritzpinn import autodiff as ad
from ritzpinn import jets
from ritzpinn.jets import Jet2, coordinate_jets, field_jet, hessian_pairs


def _fd_grad(fn, x, h=1e-6):
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e.flat[i] = h
        g.flat[i] = (fn(x + e) - fn(x - e)) / (2 * h)
    return g


def test_tape_elementwise_gradient():
    rng = np.random.default_rng(0)
    x0 = rng.uniform(0.5, 2.0, 6)

    def f(x):
        return ad.total(ad.sin(x) * ad.exp(x) / (1.0 + x * x) + ad.sqrt(x) - ad.log(x)
                        + ad.tanh(x) ** 3 + ad.absolute(x - 1.0) + ad.power(x, 1.5))

    x = ad.Tensor(x0)
    (g,) = ad.grad(f(x), [x])
    fd = _fd_grad(lambda v: float(f(v)), x0)
    assert np.allclose(g, fd, rtol=1e-7, atol=1e-8)


def test_tape_broadcast_index_and_reuse():
    a0, b0 = np.array([[1.0, 2.0, 3.0]]), np.array([[0.5], [1.5]])
    a, b = ad.Tensor(a0), ad.Tensor(b0)
    y = a * b + a  # (2, 3)
    out = ad.total(y[0] * y[1]) + ad.total(a)
    ga, gb = ad.grad(out, [a, b])
    fa = _fd_grad(lambda v: float(ad.total((v * b0 + v)[0] * (v * b0 + v)[1]) + v.sum()), a0)
    fb = _fd_grad(lambda v: float(ad.total((a0 * v + a0)[0] * (a0 * v + a0)[1])), b0)
    assert np.allclose(ga, fa, atol=1e-7) and np.allclose(gb, fb, atol=1e-7)


def test_maximum_floor_blocks_gradient():
    x = ad.Tensor(np.array([1e-20, 2.0]))
    (g,) = ad.grad(ad.total(ad.maximum(x, 1e-12)), [x])
    assert g.tolist() == [0.0, 1.0]


def test_custom_vjp_and_unused_input():
    x, y = ad.Tensor(np.arange(3.0)), ad.Tensor(np.ones(2))
    node = ad.custom(2 * x.value, [x], lambda g: (2 * g,))
    gx, gy = ad.grad(ad.total(node * node), [x, y])
    assert np.allclose(gx, 8 * x.value) and np.all(gy == 0)


def test_arrays_pass_through_module_functions():
    v = np.array([0.1, 0.2])
    assert np.allclose(ad.sin(v), np.sin(v))
    assert ad.value(v) is v
    assert ad.total(v) == pytest.approx(0.3)


@given(st.floats(-2, 2), st.floats(-2, 2))
def test_jet_product_and_chain_rules(x, y):
    pts = np.array([[x, y]])
    X, Y = coordinate_jets(pts)
    u = jets.sin(X * Y) + jets.exp(X) * Y ** 2 - jets.tanh(Y) / (2.0 + X * X)
    gx = y * np.cos(x * y) + np.exp(x) * y ** 2 + np.tanh(y) * 2 * x / (2 + x * x) ** 2
    gy = x * np.cos(x * y) + 2 * np.exp(x) * y - (1 - np.tanh(y) ** 2) / (2 + x * x)
    assert np.allclose(u.gradient[:, 0], [gx, gy], rtol=1e-12, atol=1e-12)
    hxy = np.cos(x * y) - x * y * np.sin(x * y) + 2 * np.exp(x) * y \
        + (1 - np.tanh(y) ** 2) * 2 * x / (2 + x * x) ** 2
    assert u.hessian[0, 1, 0] == pytest.approx(hxy, rel=1e-11, abs=1e-11)
    assert u.hessian[0, 1, 0] == u.hessian[1, 0, 0]


def test_jet_derived_quantities():
    pts = np.array([[0.3, 0.7, 0.2]])
    u = field_jet(lambda c: c[0] ** 2 * c[1] + c[2] ** 3, pts)
    x, y, z = pts[0]
    assert u.laplacian()[0] == pytest.approx(2 * y + 6 * z)
    g = np.array([2 * x * y, x * x, 3 * z * z])
    H = np.array([[2 * y, 2 * x, 0], [2 * x, 0, 0], [0, 0, 6 * z]])
    assert u.grad_norm2()[0] == pytest.approx(g @ g)
    assert u.quadratic_form()[0] == pytest.approx(g @ H @ g)
    assert u.directional(np.array([[0.0, 0.0, 1.0]]))[0] == pytest.approx(3 * z * z)
    assert np.trace(u.hessian[:, :, 0]) == pytest.approx(u.laplacian()[0])
    assert len(u.hess) == len(hessian_pairs(3)) == 6


def test_constant_field_promoted_to_jet():
    jet = field_jet(lambda c: 2.5, np.zeros((4, 2)))
    assert isinstance(jet, Jet2)
    assert np.all(jet.value == 2.5) and np.all(jet.gradient == 0) and np.all(jet.hessian == 0)


def test_first_order_jet_has_no_hessian():
    jet = field_jet(lambda c: c[0] * c[1], np.ones((2, 2)), order=1)
    with pytest.raises(ValueError):
        jet.laplacian()
