"""Fully connected networks with value/gradient/Hessian propagation.

Activations of a batch are stored as ``(k, C, N)`` arrays (unit, channel,
point): channel 0 is the value, channels ``1..d`` the spatial gradient and
the remaining ``d(d+1)/2`` channels the upper triangle of the Hessian.
A dense layer acts on every channel with the same weight matrix (the bias
only enters the value channel); the activation mixes channels by the chain
rule. The parameter gradient is obtained by running the same computation
backwards, layer by layer.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from . import autodiff as ad
from ._kernels import activate_kernel, activate_vjp_kernel, sincos
from .errors import ConfigurationError, NumericalError
from .jets import Jet2, field_jet, field_values, hessian_pairs


@dataclass(frozen=True)
class RFFConfig:
    m: int
    sigma: float = 1.0
    seed: int = 0


@dataclass(frozen=True)
class Ansatz:
    """Hard boundary wrapping ``A(x) + G(x) * U(x)``.

    ``A`` and ``G`` are closed-form fields written against :mod:`ritzpinn.jets`.
    """

    A: Callable
    G: Callable


@dataclass(frozen=True)
class NetworkConfig:
    input_dim: int = 2
    depth: int = 4
    width: int = 35
    activation: str = "sine"
    rff: Optional[RFFConfig] = None
    ansatz: Optional[Ansatz] = None

    def __post_init__(self):
        if self.input_dim not in (2, 3):
            raise ConfigurationError("input_dim must be 2 or 3")
        if self.depth < 1 or self.width < 1:
            raise ConfigurationError("depth and width must be positive")
        if self.activation not in ("sine", "tanh"):
            raise ConfigurationError(f"unknown activation {self.activation!r}")
        if self.rff is not None and (self.rff.m < 1 or self.rff.sigma <= 0):
            raise ConfigurationError("rff needs m >= 1 and sigma > 0")

    @property
    def embed_dim(self):
        return 2 * self.rff.m if self.rff is not None else self.input_dim

    def layer_shapes(self):
        sizes = [self.embed_dim] + [self.width] * self.depth + [1]
        return list(zip(sizes[:-1], sizes[1:]))

    @property
    def num_params(self):
        return sum(i * o + o for i, o in self.layer_shapes())


class ParamLayout:
    """Offsets of each layer's weight matrix and bias inside the flat vector.

    Weights are stored row-major with shape ``(fan_in, fan_out)``.
    """

    def __init__(self, shapes):
        self.shapes = list(shapes)
        self.offsets = []
        pos = 0
        for fan_in, fan_out in self.shapes:
            w = (pos, pos + fan_in * fan_out)
            b = (w[1], w[1] + fan_out)
            self.offsets.append((w, b))
            pos = b[1]
        self.size = pos

    def unflatten(self, theta):
        out = []
        for (fan_in, fan_out), ((w0, w1), (b0, b1)) in zip(self.shapes, self.offsets):
            out.append((theta[w0:w1].reshape(fan_in, fan_out), theta[b0:b1]))
        return out

    def layer_slices(self):
        """One contiguous slice per layer, weights and bias together."""
        return [slice(w0, b1) for (w0, _), (_, b1) in self.offsets]


class _Activation:
    """Activation value and first derivative at the value channel."""

    def __init__(self, name):
        self.name = name
        self.sine = name == "sine"

    def forward(self, z):
        if self.sine:
            return sincos(z)
        t = np.tanh(z)
        return t, 1.0 - t * t

    def derivs(self, s0, s1):
        """Second and third derivatives from the first two."""
        if self.sine:
            return -s0, -s1
        return -2.0 * s0 * s1, s1 * (6.0 * s0 * s0 - 2.0)


@dataclass
class BoundPoints:
    """Evaluation points with everything that does not depend on the parameters."""

    points: np.ndarray
    order: int
    channels: np.ndarray  # input jets, feature-major (k0, C, N)
    ansatz_A: object = None
    ansatz_G: object = None

    def __len__(self):
        return len(self.points)


def rff_embed(B, x):
    """Random Fourier features ``(sin(Bx), cos(Bx))`` for a point or a batch."""
    B = np.asarray(B, dtype=float)
    x = np.asarray(x, dtype=float)
    if B.ndim != 2 or x.shape[-1] != B.shape[1]:
        raise ConfigurationError(f"cannot embed points of dim {x.shape[-1]} with B of shape {B.shape}")
    z = x @ B.T
    return np.concatenate([np.sin(z), np.cos(z)], axis=-1)


def _input_channels(points, order, B=None):
    """Input jets in feature-major layout ``(k0, C, N)``."""
    n, d = points.shape
    pairs = hessian_pairs(d)
    C = 1 + (d if order >= 1 else 0) + (len(pairs) if order >= 2 else 0)
    if B is None:
        A = np.zeros((d, C, n))
        A[:, 0, :] = points.T
        if order >= 1:
            for i in range(d):
                A[i, 1 + i, :] = 1.0
        return A
    z = B @ points.T
    s, c = np.sin(z), np.cos(z)
    m = B.shape[0]
    A = np.empty((2 * m, C, n))
    A[:m, 0], A[m:, 0] = s, c
    if order >= 1:
        for i in range(d):
            A[:m, 1 + i] = c * B[:, i:i + 1]
            A[m:, 1 + i] = -s * B[:, i:i + 1]
    if order >= 2:
        for p, (i, j) in enumerate(pairs):
            bij = (B[:, i] * B[:, j])[:, None]
            A[:m, 1 + d + p] = -s * bij
            A[m:, 1 + d + p] = -c * bij
    return A


def activate_reference(act, Z, s0, s1, d, pairs, out):
    """Plain numpy version of the activation chain rule (feature-major)."""
    C = Z.shape[1]
    out[:, 0] = s0
    if C > 1:
        s2, _ = act.derivs(s0, s1)
        out[:, 1:1 + d] = Z[:, 1:1 + d] * s1[:, None]
        for p, (i, j) in enumerate(pairs[:C - 1 - d]):
            h = 1 + d + p
            out[:, h] = s2 * Z[:, 1 + i] * Z[:, 1 + j] + s1 * Z[:, h]
    return out


def activate_vjp_reference(act, Z, s0, s1, dA, d, pairs, dZ):
    """Adjoint of :func:`activate_reference`."""
    C = Z.shape[1]
    dZ[:, 0] = dA[:, 0] * s1
    if C > 1:
        s2, s3 = act.derivs(s0, s1)
        G, dG = Z[:, 1:1 + d], dA[:, 1:1 + d]
        dZ[:, 0] += s2 * (dG * G).sum(axis=1)
        dZ[:, 1:1 + d] = dG * s1[:, None]
        for p, (i, j) in enumerate(pairs[:C - 1 - d]):
            h = 1 + d + p
            dH = dA[:, h]
            dZ[:, 0] += dH * (s3 * G[:, i] * G[:, j] + s2 * Z[:, h])
            t = s2 * dH
            dZ[:, 1 + i] += t * G[:, j]
            dZ[:, 1 + j] += t * G[:, i]
            dZ[:, h] = dH * s1
    return dZ


class Network:
    """A configured network: parameter layout, frozen RFF matrix, ansatz."""

    def __init__(self, config):
        self.config = config
        self.layout = ParamLayout(config.layer_shapes())
        self.dim = config.input_dim
        self.pairs = hessian_pairs(self.dim)
        self._pi = np.array([i for i, _ in self.pairs], dtype=np.int64)
        self._pj = np.array([j for _, j in self.pairs], dtype=np.int64)
        self._act = _Activation(config.activation)
        self.B = None
        if config.rff is not None:
            rng = np.random.default_rng(config.rff.seed)
            self.B = rng.normal(0.0, config.rff.sigma, size=(config.rff.m, self.dim))

    @property
    def num_params(self):
        return self.layout.size

    def init_glorot(self, seed):
        """Glorot-uniform weights, zero biases."""
        rng = np.random.default_rng(seed)
        theta = np.zeros(self.layout.size)
        for (fan_in, fan_out), ((w0, w1), _) in zip(self.layout.shapes, self.layout.offsets):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            theta[w0:w1] = rng.uniform(-limit, limit, size=fan_in * fan_out)
        return theta

    # -- evaluation --------------------------------------------------------
    def bind(self, points, order=2):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[1] != self.dim:
            raise ConfigurationError(f"expected {self.dim}-d points, got {points.shape[1]}-d")
        bound = BoundPoints(points, order, _input_channels(points, order, self.B))
        ansatz = self.config.ansatz
        if ansatz is not None:
            if order == 0:
                bound.ansatz_A = field_values(ansatz.A, points)
                bound.ansatz_G = field_values(ansatz.G, points)
            else:
                bound.ansatz_A = field_jet(ansatz.A, points, order)
                bound.ansatz_G = field_jet(ansatz.G, points, order)
        return bound

    def _affine(self, W, b, A):
        k, C, n = A.shape
        Z = (W.T @ A.reshape(k, C * n)).reshape(W.shape[1], C, n)
        Z[:, 0, :] += b[:, None]
        return Z

    def _propagate(self, theta, A, record):
        layers = self.layout.unflatten(theta)
        last = len(layers) - 1
        inputs, acts = [], []
        for ell, (W, b) in enumerate(layers):
            Z = self._affine(W, b, A)
            if record:
                inputs.append(A)
            if ell == last:
                return Z[0], (inputs, acts)
            s0, s1 = self._act.forward(Z[:, 0, :])
            if record:
                acts.append((Z, s0, s1))
            A = self._activate(Z, s0, s1)

    def _activate(self, Z, s0, s1):
        out = np.empty_like(Z)
        if activate_kernel is not None:
            activate_kernel(Z, s0, s1, out, self.dim, self._pi, self._pj, self._act.sine)
            return out
        return activate_reference(self._act, Z, s0, s1, self.dim, self.pairs, out)

    def _activate_vjp(self, Z, s0, s1, dA):
        dZ = np.empty_like(Z)
        if activate_vjp_kernel is not None:
            activate_vjp_kernel(Z, s0, s1, dA, dZ, self.dim, self._pi, self._pj, self._act.sine)
            return dZ
        return activate_vjp_reference(self._act, Z, s0, s1, dA, self.dim, self.pairs, dZ)

    def _vjp(self, theta, cache, dout):
        inputs, acts = cache
        layers = self.layout.unflatten(theta)
        grad = np.empty(self.layout.size)
        dZ = dout[None]
        for ell in range(len(layers) - 1, -1, -1):
            W, _ = layers[ell]
            A = inputs[ell]
            k, C, n = A.shape
            m = W.shape[1]
            flat = dZ.reshape(m, C * n)
            (w0, w1), (b0, b1) = self.layout.offsets[ell]
            grad[w0:w1] = (A.reshape(k, C * n) @ flat.T).ravel()
            grad[b0:b1] = dZ[:, 0, :].sum(axis=1)
            if ell == 0:
                break
            dA = (W @ flat).reshape(k, C, n)
            dZ = self._activate_vjp(*acts[ell - 1], dA)
        return grad

    def _raw(self, theta, bound, record=False):
        out, cache = self._propagate(theta, bound.channels, record)
        if not np.all(np.isfinite(out)):
            raise NumericalError("non-finite network output", layer=self._first_bad_layer(theta, bound))
        return out, cache

    def _first_bad_layer(self, theta, bound):
        layers = self.layout.unflatten(theta)
        A = bound.channels
        for ell, (W, b) in enumerate(layers):
            Z = self._affine(W, b, A)
            if ell < len(layers) - 1:
                Z = self._activate(Z, *self._act.forward(Z[:, 0, :]))
            if not np.all(np.isfinite(Z)):
                return ell
            A = Z
        return len(layers) - 1

    def output(self, theta, bound):
        """Network output at bound points.

        Returns a :class:`Jet2` for first/second-order bindings and a value
        array for order 0. With a tape tensor ``theta`` the result is
        differentiable in the parameters.
        """
        if isinstance(theta, ad.Tensor):
            raw, cache = self._raw(theta.value, bound, record=True)
            node = ad.custom(raw, [theta], lambda g: (self._vjp(theta.value, cache, g),))
            channels = [node[c] for c in range(raw.shape[0])]
        else:
            raw, _ = self._raw(np.asarray(theta, dtype=float), bound)
            channels = list(raw)
        return self._wrap(channels, bound)

    def _wrap(self, channels, bound):
        d = self.dim
        if bound.order == 0:
            u = channels[0]
            if bound.ansatz_A is not None:
                u = bound.ansatz_A + bound.ansatz_G * u
            return u
        hess = channels[1 + d:] if bound.order >= 2 else None
        u = Jet2(channels[0], channels[1:1 + d], hess)
        if bound.ansatz_A is not None:
            u = bound.ansatz_A + bound.ansatz_G * u
        return u

    def forward(self, theta, points):
        """Values U(x) at a batch of points."""
        return np.asarray(self.output(theta, self.bind(points, 0)), dtype=float)

    def forward_jet(self, theta, points, order=2):
        return self.output(theta, self.bind(points, order))


@lru_cache(maxsize=32)
def network(config):
    """Shared :class:`Network` instance for a configuration."""
    return Network(config)


def init_glorot(config, seed):
    return network(config).init_glorot(seed)


def forward(params, config, x):
    x = np.asarray(x, dtype=float)
    out = network(config).forward(params, np.atleast_2d(x))
    return float(out[0]) if x.ndim == 1 else out


def forward_jet(params, config, x, order=2):
    return network(config).forward_jet(params, np.atleast_2d(np.asarray(x, dtype=float)), order)


def grad_params(params, config, functional):
    """Exact gradient of ``functional(theta)`` in the parameters.

    ``functional`` receives the parameters as a tape tensor and evaluates the
    network through :meth:`Network.output` (or any tape-aware arithmetic).
    """
    theta = ad.Tensor(np.array(params, dtype=float))
    out = functional(theta)
    if not isinstance(out, ad.Tensor):
        return np.zeros_like(theta.value)
    (g,) = ad.grad(out, [theta])
    if not np.all(np.isfinite(g)):
        raise NumericalError("non-finite parameter gradient")
    return g
