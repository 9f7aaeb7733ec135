"""A small reverse-mode tape over numpy arrays.

Only what the loss formulas need is here: elementwise arithmetic with
broadcasting, a handful of unary functions, reductions and indexing. Heavy
primitives (the network jet propagation) plug in through :func:`custom`,
supplying their own vector-Jacobian product.

The module-level functions (:func:`sin`, :func:`maximum`, ...) accept plain
arrays as well as tensors, so the same formula code runs with or without
recording a tape.
"""

import numpy as np


def _unbroadcast(g, shape):
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def _value(x):
    return x.value if isinstance(x, Tensor) else x


class Tensor:
    """Array node on the tape."""

    __array_ufunc__ = None  # make numpy defer to our reflected operators

    def __init__(self, value, parents=(), vjp=None):
        self.value = np.asarray(value, dtype=float)
        self._parents = parents
        self._vjp = vjp

    @property
    def shape(self):
        return self.value.shape

    @property
    def ndim(self):
        return self.value.ndim

    def __len__(self):
        return len(self.value)

    def __repr__(self):
        return f"Tensor({self.value!r})"

    def __float__(self):
        return float(self.value)

    # arithmetic -----------------------------------------------------------
    def __add__(self, other):
        a, b = self.value, _value(other)
        out = a + b
        if isinstance(other, Tensor):
            return Tensor(out, (self, other),
                          lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))
        return Tensor(out, (self,), lambda g: (_unbroadcast(g, a.shape),))

    __radd__ = __add__

    def __neg__(self):
        return Tensor(-self.value, (self,), lambda g: (-g,))

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        a, b = self.value, _value(other)
        out = a * b
        if isinstance(other, Tensor):
            return Tensor(out, (self, other),
                          lambda g: (_unbroadcast(g * b, a.shape), _unbroadcast(g * a, b.shape)))
        return Tensor(out, (self,), lambda g: (_unbroadcast(g * b, a.shape),))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            return self * other ** -1.0
        return self * (1.0 / np.asarray(other, dtype=float))

    def __rtruediv__(self, other):
        return other * self ** -1.0

    def __pow__(self, p):
        if isinstance(p, Tensor):
            raise TypeError("tensor exponents are not supported")
        a = self.value
        out = a ** p
        return Tensor(out, (self,), lambda g: (g * p * a ** (p - 1),))

    def __getitem__(self, idx):
        a = self.value

        def vjp(g):
            full = np.zeros_like(a)
            if _fancy(idx):
                np.add.at(full, idx, g)
            else:
                full[idx] = g
            return (full,)

        return Tensor(a[idx], (self,), vjp)

    def sum(self, axis=None):
        a = self.value
        out = a.sum(axis=axis)

        def vjp(g):
            if axis is not None:
                g = np.expand_dims(g, axis)
            return (np.broadcast_to(g, a.shape).copy(),)

        return Tensor(out, (self,), vjp)


def _fancy(idx):
    parts = idx if isinstance(idx, tuple) else (idx,)
    return any(isinstance(p, (list, np.ndarray)) for p in parts)


def custom(value, parents, vjp):
    """Record an externally differentiated primitive."""
    return Tensor(value, tuple(parents), vjp)


def _unary(x, f, df):
    if not isinstance(x, Tensor):
        return f(x)
    a = x.value
    return Tensor(f(a), (x,), lambda g: (g * df(a),))


def sin(x):
    return _unary(x, np.sin, np.cos)


def cos(x):
    return _unary(x, np.cos, lambda a: -np.sin(a))


def exp(x):
    return _unary(x, np.exp, np.exp)


def log(x):
    return _unary(x, np.log, lambda a: 1.0 / a)


def tanh(x):
    return _unary(x, np.tanh, lambda a: 1.0 - np.tanh(a) ** 2)


def sqrt(x):
    return _unary(x, np.sqrt, lambda a: 0.5 / np.sqrt(a))


def absolute(x):
    return _unary(x, np.abs, np.sign)


def maximum(x, floor):
    """Elementwise ``max(x, floor)`` for a constant ``floor``."""
    return _unary(x, lambda a: np.maximum(a, floor), lambda a: (a > floor).astype(float))


def power(x, p):
    if isinstance(x, Tensor):
        return x ** p
    return np.power(x, p)


def total(x):
    """Sum of all entries (numpy's pairwise summation)."""
    if isinstance(x, Tensor):
        return x.sum()
    return np.sum(x)


def value(x):
    return np.asarray(_value(x), dtype=float)


def _toposort(root):
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen:
                stack.append((p, False))
    return order


def grad(output, inputs):
    """Gradients of the scalar tensor ``output`` with respect to ``inputs``.

    A fresh reverse sweep is made on every call, so several outputs sharing
    one forward graph can be differentiated separately.
    """
    if output.value.size != 1:
        raise ValueError("grad needs a scalar output")
    cot = {id(output): np.ones_like(output.value)}
    for node in reversed(_toposort(output)):
        g = cot.pop(id(node), None) if node._parents else cot.get(id(node))
        if g is None or node._vjp is None:
            continue
        for parent, pg in zip(node._parents, node._vjp(g)):
            if pg is None:
                continue
            key = id(parent)
            cot[key] = cot[key] + pg if key in cot else pg
    return [cot.get(id(x), np.zeros_like(x.value)) for x in inputs]
