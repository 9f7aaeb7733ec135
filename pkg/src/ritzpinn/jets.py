"""Second-order jets: value, gradient and symmetric Hessian carried together.

A :class:`Jet2` describes a scalar field at a batch of points. Components
are numpy arrays of shape ``(N,)`` or tape tensors of the same shape, so the
arithmetic below doubles as forward-mode differentiation in ``x`` and, when
the components are tensors, stays differentiable in the network parameters.

The Hessian is stored as its upper triangle, in ``numpy.triu_indices``
order, which makes symmetry hold by construction.
"""

import numpy as np

from . import autodiff as ad


def hessian_pairs(dim):
    """Upper-triangle index pairs ``(i, j)``, ``i <= j``."""
    rows, cols = np.triu_indices(dim)
    return list(zip(rows.tolist(), cols.tolist()))


class Jet2:
    __array_ufunc__ = None

    def __init__(self, value, grad, hess=None):
        self.value = value
        self.grad = tuple(grad)
        self.hess = None if hess is None else tuple(hess)

    @property
    def dim(self):
        return len(self.grad)

    @property
    def order(self):
        return 1 if self.hess is None else 2

    @property
    def gradient(self):
        """Gradient as a ``(d, N)`` array."""
        return np.stack([ad.value(g) for g in self.grad])

    @property
    def hessian(self):
        """Full symmetric Hessian as a ``(d, d, N)`` array."""
        if self.hess is None:
            raise ValueError("first-order jet has no Hessian")
        d = self.dim
        comps = [ad.value(h) for h in self.hess]
        out = np.empty((d, d) + np.shape(comps[0]))
        for (i, j), h in zip(hessian_pairs(d), comps):
            out[i, j] = h
            out[j, i] = h
        return out

    def laplacian(self):
        if self.hess is None:
            raise ValueError("first-order jet has no Hessian")
        pairs = hessian_pairs(self.dim)
        out = 0.0
        for (i, j), h in zip(pairs, self.hess):
            if i == j:
                out = out + h
        return out

    def grad_norm2(self):
        out = 0.0
        for g in self.grad:
            out = out + g * g
        return out

    def quadratic_form(self):
        """``grad^T H grad``, used by the p-Laplacian residual."""
        out = 0.0
        for (i, j), h in zip(hessian_pairs(self.dim), self.hess):
            term = h * self.grad[i] * self.grad[j]
            out = out + (term if i == j else 2.0 * term)
        return out

    def directional(self, direction):
        """``grad . n`` for per-point directions of shape ``(N, d)``."""
        out = 0.0
        for k, g in enumerate(self.grad):
            out = out + g * direction[:, k]
        return out

    # arithmetic -----------------------------------------------------------
    def _lift(self, other):
        if isinstance(other, Jet2):
            return other
        return None

    def __add__(self, other):
        o = self._lift(other)
        if o is None:
            return Jet2(self.value + other, self.grad, self.hess)
        hess = None
        if self.hess is not None and o.hess is not None:
            hess = [a + b for a, b in zip(self.hess, o.hess)]
        return Jet2(self.value + o.value, [a + b for a, b in zip(self.grad, o.grad)], hess)

    __radd__ = __add__

    def __neg__(self):
        hess = None if self.hess is None else [-h for h in self.hess]
        return Jet2(-self.value, [-g for g in self.grad], hess)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._lift(other)
        if o is None:
            hess = None if self.hess is None else [h * other for h in self.hess]
            return Jet2(self.value * other, [g * other for g in self.grad], hess)
        u, v = self, o
        grad = [u.value * gv + v.value * gu for gu, gv in zip(u.grad, v.grad)]
        hess = None
        if u.hess is not None and v.hess is not None:
            hess = []
            for (i, j), hu, hv in zip(hessian_pairs(u.dim), u.hess, v.hess):
                hess.append(u.value * hv + v.value * hu
                            + u.grad[i] * v.grad[j] + u.grad[j] * v.grad[i])
        return Jet2(u.value * v.value, grad, hess)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet2):
            return self * other ** -1.0
        return self * (1.0 / other)

    def __rtruediv__(self, other):
        return (self ** -1.0) * other

    def __pow__(self, p):
        return self.apply(lambda a: ad.power(a, p),
                          lambda a: p * ad.power(a, p - 1),
                          lambda a: p * (p - 1) * ad.power(a, p - 2))

    def apply(self, f, df, d2f):
        """Chain rule for a scalar function with known first two derivatives."""
        u = self.value
        f1 = df(u)
        grad = [f1 * g for g in self.grad]
        hess = None
        if self.hess is not None:
            f2 = d2f(u)
            hess = [f2 * self.grad[i] * self.grad[j] + f1 * h
                    for (i, j), h in zip(hessian_pairs(self.dim), self.hess)]
        return Jet2(f(u), grad, hess)


def _dispatch(x, jet_fn, plain_fn):
    if isinstance(x, Jet2):
        return jet_fn(x)
    return plain_fn(x)


def sin(x):
    return _dispatch(x, lambda j: j.apply(ad.sin, ad.cos, lambda a: -ad.sin(a)), ad.sin)


def cos(x):
    return _dispatch(x, lambda j: j.apply(ad.cos, lambda a: -ad.sin(a), lambda a: -ad.cos(a)), ad.cos)


def exp(x):
    return _dispatch(x, lambda j: j.apply(ad.exp, ad.exp, ad.exp), ad.exp)


def tanh(x):
    def d1(a):
        t = ad.tanh(a)
        return 1.0 - t * t

    def d2(a):
        t = ad.tanh(a)
        return -2.0 * t * (1.0 - t * t)

    return _dispatch(x, lambda j: j.apply(ad.tanh, d1, d2), ad.tanh)


def coordinates(points):
    """Split ``(N, d)`` points into a tuple of coordinate arrays."""
    points = np.asarray(points, dtype=float)
    return tuple(points[:, k] for k in range(points.shape[1]))


def coordinate_jets(points, order=2):
    """Coordinate functions ``x_k`` as jets at the given points."""
    points = np.asarray(points, dtype=float)
    n, d = points.shape
    zero, one = np.zeros(n), np.ones(n)
    P = len(hessian_pairs(d))
    out = []
    for k in range(d):
        grad = [one if i == k else zero for i in range(d)]
        hess = [zero] * P if order >= 2 else None
        out.append(Jet2(points[:, k].copy(), grad, hess))
    return tuple(out)


def field_jet(field, points, order=2):
    """Evaluate a closed-form field ``field(x)`` as a jet.

    ``field`` takes a sequence of coordinates and must be written with the
    functions of this module (or plain arithmetic) so it accepts jets.
    Constant results are promoted to jets with zero derivatives.
    """
    points = np.asarray(points, dtype=float)
    out = field(coordinate_jets(points, order))
    if not isinstance(out, Jet2):
        n, d = points.shape
        zero = np.zeros(n)
        P = len(hessian_pairs(d))
        out = Jet2(np.broadcast_to(np.asarray(out, float), (n,)).copy(), [zero] * d,
                   [zero] * P if order >= 2 else None)
    return out


def field_values(field, points):
    """Evaluate ``field(x)`` at ``(N, d)`` points as an ``(N,)`` array."""
    points = np.asarray(points, dtype=float)
    out = field(coordinates(points))
    return np.broadcast_to(np.asarray(out, dtype=float), (points.shape[0],)).copy()
