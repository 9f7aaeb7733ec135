"""Collocation sets with quadrature weights on axis-aligned boxes.

Two schemes are supported: uniform Monte-Carlo points with equal weights
``1/N`` (the plain average) and tensor-product Gauss-Legendre rules whose
weights carry the volume or surface measure.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigurationError, NumericalError


@dataclass(frozen=True)
class BoxDomain:
    intervals: tuple

    def __post_init__(self):
        intervals = tuple((float(a), float(b)) for a, b in self.intervals)
        if len(intervals) not in (2, 3):
            raise ConfigurationError(f"box dimension must be 2 or 3, got {len(intervals)}")
        for a, b in intervals:
            if not a < b:
                raise ConfigurationError(f"empty interval ({a}, {b})")
        object.__setattr__(self, "intervals", intervals)

    @classmethod
    def unit(cls, dim=2):
        return cls(((0.0, 1.0),) * dim)

    @property
    def dim(self):
        return len(self.intervals)

    @property
    def lower(self):
        return np.array([a for a, _ in self.intervals])

    @property
    def upper(self):
        return np.array([b for _, b in self.intervals])

    @property
    def volume(self):
        return float(np.prod(self.upper - self.lower))

    def face_measures(self):
        """Measure of the face pair orthogonal to each axis (one face each)."""
        lengths = self.upper - self.lower
        return np.array([np.prod(np.delete(lengths, k)) for k in range(self.dim)])

    @property
    def surface(self):
        return float(2.0 * self.face_measures().sum())

    def contains(self, points, tol=0.0):
        points = np.atleast_2d(points)
        return np.all((points >= self.lower - tol) & (points <= self.upper + tol), axis=1)


@dataclass(frozen=True)
class SampleSet:
    """Points with per-point weights.

    ``normals`` holds outward unit normals for boundary sets.
    """

    points: np.ndarray
    weights: np.ndarray
    region: str
    scheme: str
    domain: BoxDomain
    normals: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        if self.region not in ("interior", "boundary"):
            raise ConfigurationError(f"unknown region {self.region!r}")
        if self.scheme not in ("monte_carlo", "gauss"):
            raise ConfigurationError(f"unknown scheme {self.scheme!r}")
        if len(self.points) != len(self.weights):
            raise ConfigurationError("points and weights differ in length")

    def __len__(self):
        return len(self.points)

    @property
    def dim(self):
        return self.points.shape[1]


def _legendre(n, x):
    """P_n(x) and P_n'(x) by the three-term recurrence."""
    p0, p1 = np.ones_like(x), x.copy()
    if n == 0:
        return p0, np.zeros_like(x)
    for k in range(2, n + 1):
        p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
    dp = n * (x * p1 - p0) / (x * x - 1.0)
    return p1, dp


def gauss_legendre(n, tol=1e-14, max_iter=100):
    """Nodes and weights of the n-point Gauss-Legendre rule on (-1, 1).

    Newton's method on the Legendre recurrence, started from the usual
    cosine guesses. Only the positive half is solved for and mirrored, so
    the nodes are exactly antisymmetric.
    """
    if n < 1:
        raise ConfigurationError("need at least one quadrature node")
    m = (n + 1) // 2
    i = np.arange(1, m + 1)
    x = np.cos(np.pi * (i - 0.25) / (n + 0.5))
    for _ in range(max_iter):
        p, dp = _legendre(n, x)
        dx = p / dp
        x = x - dx
        if np.max(np.abs(dx)) < tol:
            break
    else:
        raise NumericalError(f"Gauss-Legendre Newton iteration did not converge for n={n}")
    _, dp = _legendre(n, x)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    if n % 2 == 1:
        x[-1] = 0.0  # middle root
    nodes = np.concatenate([-x, x[::-1][n % 2:]])
    weights = np.concatenate([w, w[::-1][n % 2:]])
    return nodes, weights


def affine_map(interval, t):
    """Map ``t`` in [-1, 1] onto ``(a, b)``; returns (point, weight scale)."""
    a, b = interval
    return (a * (1.0 - t) + b * (1.0 + t)) / 2.0, (b - a) / 2.0


def _mapped_rule(interval, n):
    nodes, weights = gauss_legendre(n)
    x, scale = affine_map(interval, nodes)
    return x, weights * scale


def _tensor_rule(rules):
    grids = np.meshgrid(*[r[0] for r in rules], indexing="ij")
    wgrids = np.meshgrid(*[r[1] for r in rules], indexing="ij")
    points = np.stack([g.ravel() for g in grids], axis=1)
    weights = np.prod(np.stack([w.ravel() for w in wgrids], axis=1), axis=1)
    return points, weights


def gauss_interior(domain, n_G):
    if n_G < 1:
        raise ConfigurationError("n_G must be positive")
    rules = [_mapped_rule(iv, n_G) for iv in domain.intervals]
    points, weights = _tensor_rule(rules)
    return SampleSet(points, weights, "interior", "gauss", domain)


def gauss_boundary(domain, n_G):
    """Per-face tensor rules; each face gets n_G**(d-1) points.

    Faces are ordered (a_1, b_1, a_2, b_2, ...) by the fixed coordinate.
    """
    if n_G < 1:
        raise ConfigurationError("n_G must be positive")
    d = domain.dim
    rules = [_mapped_rule(iv, n_G) for iv in domain.intervals]
    pts, wts, nrm = [], [], []
    for k in range(d):
        running = [rules[j] for j in range(d) if j != k]
        face_pts, face_w = _tensor_rule(running)
        for side, bound in ((-1.0, domain.intervals[k][0]), (1.0, domain.intervals[k][1])):
            p = np.insert(face_pts, k, bound, axis=1)
            normal = np.zeros((len(p), d))
            normal[:, k] = side
            pts.append(p)
            wts.append(face_w)
            nrm.append(normal)
    return SampleSet(np.concatenate(pts), np.concatenate(wts), "boundary", "gauss",
                     domain, np.concatenate(nrm))


def _rng(seed):
    return np.random.default_rng(seed)


def mc_interior(domain, count, seed):
    if count < 1:
        raise ConfigurationError("count must be positive")
    rng = _rng(seed)
    points = domain.lower + rng.random((count, domain.dim)) * (domain.upper - domain.lower)
    return SampleSet(points, np.full(count, 1.0 / count), "interior", "monte_carlo", domain)


def mc_boundary(domain, count, seed):
    """Uniform points on the boundary with respect to surface measure."""
    if count < 1:
        raise ConfigurationError("count must be positive")
    rng = _rng(seed)
    d = domain.dim
    lo, hi = domain.lower, domain.upper
    measures = np.repeat(domain.face_measures(), 2)
    face = rng.choice(2 * d, size=count, p=measures / measures.sum())
    points = lo + rng.random((count, d)) * (hi - lo)
    normals = np.zeros((count, d))
    axis, upper_side = face // 2, face % 2 == 1
    rows = np.arange(count)
    points[rows, axis] = np.where(upper_side, hi[axis], lo[axis])
    normals[rows, axis] = np.where(upper_side, 1.0, -1.0)
    return SampleSet(points, np.full(count, 1.0 / count), "boundary", "monte_carlo",
                     domain, normals)


def uniform_grid(domain, resolution):
    """Tensor grid including endpoints, ``resolution`` points per axis."""
    axes = [np.linspace(a, b, resolution) for a, b in domain.intervals]
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)
