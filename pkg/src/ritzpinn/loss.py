"""Loss formulations and error indicators.

Every integral is a weighted sum over a :class:`~ritzpinn.sampling.SampleSet`;
Monte-Carlo sets carry weights ``1/N`` and Gauss sets carry quadrature
weights, so one code path serves both.

:class:`Objective` binds a network, a problem and the two sample sets once
and is what the training loop calls. The module-level functions
(:func:`pinn_loss`, :func:`ritz_loss`, ...) are thin wrappers for one-off
evaluation; they accept plain parameter arrays or tape tensors.
"""

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import autodiff as ad
from .errors import ConfigurationError, NumericalError
from .net import network

GRAD_FLOOR = 1e-12
MASS_FLOOR = 1e-12

FORMULATIONS = ("pinn", "ritz")
BOUNDARY_MODES = ("soft", "hard", "augmented")


@dataclass(frozen=True)
class LossSpec:
    formulation: str = "pinn"
    boundary: str = "soft"
    w_I: float = 1.0
    w_B: float = 1.0
    w_C: float = 1.0
    p: float = 2.0

    def __post_init__(self):
        if self.formulation not in FORMULATIONS:
            raise ConfigurationError(f"unknown formulation {self.formulation!r}")
        if self.boundary not in BOUNDARY_MODES:
            raise ConfigurationError(f"unknown boundary mode {self.boundary!r}")
        if min(self.w_I, self.w_B, self.w_C) < 0:
            raise ConfigurationError("loss weights must be nonnegative")
        if self.p < 2:
            raise ConfigurationError("p must be at least 2")


@dataclass
class MultiplierState:
    """Lagrange multipliers: one per boundary point plus the volume constraint."""

    lambda_boundary: np.ndarray
    lambda_C: float = 1.0

    @classmethod
    def initial(cls, size, value=1.0):
        return cls(np.full(size, float(value)), float(value))

    def copy(self):
        return MultiplierState(self.lambda_boundary.copy(), self.lambda_C)


@dataclass
class LossBreakdown:
    """Loss total and its parts.

    ``total = w_I*interior_term + w_B*boundary_term + augmented_term +
    constraint_term``; for eigenvalue problems the interior weight is 1 and
    ``interior_term`` equals ``rayleigh``.
    """

    total: object
    interior_term: object = 0.0
    boundary_term: object = 0.0
    augmented_term: object = 0.0
    constraint_term: object = 0.0
    rayleigh: object = None

    def numeric(self):
        def f(x):
            return None if x is None else float(ad.value(x))
        return LossBreakdown(f(self.total), f(self.interior_term), f(self.boundary_term),
                             f(self.augmented_term), f(self.constraint_term), f(self.rayleigh))


@dataclass
class Evaluation:
    """Everything one training step needs from a single forward/backward pass."""

    breakdown: LossBreakdown
    grad: np.ndarray
    residual: Optional[np.ndarray] = None  # U - g at the boundary points
    mass: Optional[float] = None  # quadrature of U^2 (eigen runs)
    term_grads: dict = field(default_factory=dict)


# -- pointwise formulas --------------------------------------------------------

def pde_residual(u, f, p=2.0):
    """Strong residual ``Delta_p U + f`` from a second-order jet.

    For ``p > 2`` the divergence is expanded with the full Hessian and
    ``|grad U|^2`` is floored before the fractional powers.
    """
    if p == 2:
        return u.laplacian() + f
    n2 = ad.maximum(u.grad_norm2(), GRAD_FLOOR)
    return (ad.power(n2, (p - 2) / 2) * u.laplacian()
            + (p - 2) * ad.power(n2, (p - 4) / 2) * u.quadratic_form() + f)


def energy_density(u, f, p=2.0):
    """``|grad U|^p / p - f U``."""
    n2 = u.grad_norm2()
    if p == 2:
        return 0.5 * n2 - f * u.value
    return (1.0 / p) * ad.power(ad.maximum(n2, GRAD_FLOOR), p / 2) - f * u.value


def _flux_factor(u, p):
    if p == 2:
        return 1.0
    return ad.power(ad.maximum(u.grad_norm2(), GRAD_FLOOR), (p - 2) / 2)


# -- objective -------------------------------------------------------------------

def _check_sets(problem, interior, boundary):
    if interior.region != "interior":
        raise ConfigurationError("first sample set must be an interior set")
    if interior.domain != problem.domain:
        raise ConfigurationError("interior sample set lives on a different domain than the problem")
    if boundary is not None:
        if boundary.region != "boundary":
            raise ConfigurationError("second sample set must be a boundary set")
        if boundary.domain != problem.domain:
            raise ConfigurationError("boundary sample set lives on a different domain than the problem")


def _resolve_p(spec, problem):
    if problem.kind == "p_laplace":
        if spec.p != 2 and spec.p != problem.p:
            raise ConfigurationError(f"loss p={spec.p} disagrees with problem p={problem.p}")
        return problem.p
    return spec.p


class Objective:
    """Loss of one (network, problem, sample sets, spec) combination."""

    def __init__(self, net, problem, interior, boundary, spec):
        _check_sets(problem, interior, boundary)
        if spec.boundary == "hard" and net.config.ansatz is None:
            raise ConfigurationError("hard boundary mode needs a network ansatz")
        if spec.boundary != "hard" and boundary is None:
            raise ConfigurationError("soft and augmented modes need a boundary set")
        self.net = net
        self.problem = problem
        self.spec = spec
        self.p = _resolve_p(spec, problem)
        self.eigen = problem.kind == "eigen"
        order = 2 if (spec.formulation == "pinn" and not self.eigen) else 1
        self.interior = interior
        self.boundary = boundary
        self._int = net.bind(interior.points, order)
        self._wi = interior.weights
        self._f = problem.f(interior.points)
        self._v = problem.v(interior.points) if self.eigen else None
        self.uses_boundary = spec.boundary != "hard"
        self.augmented = spec.boundary == "augmented"
        if self.uses_boundary:
            self._bnd = net.bind(boundary.points, 0)
            self._wb = boundary.weights
            self._g = problem.g(boundary.points)

    @property
    def boundary_size(self):
        return len(self.boundary) if self.boundary is not None else 0

    def initial_multipliers(self, value=1.0):
        return MultiplierState.initial(self.boundary_size, value)

    def _check_multipliers(self, multipliers):
        if not self.augmented:
            return
        if multipliers is None:
            raise ConfigurationError("augmented mode needs multipliers")
        if len(multipliers.lambda_boundary) != self.boundary_size:
            raise ConfigurationError("multiplier count differs from the boundary set size")

    def pieces(self, theta, multipliers=None, w_I=None, w_B=None, point_weights=None):
        """Loss parts for array or tape-tensor parameters.

        ``point_weights`` rescales the boundary penalty per point (the
        self-adaptive scheme). Returns ``(breakdown, residual, mass)``;
        the breakdown fields are tensors when ``theta`` is a tensor.
        """
        self._check_multipliers(multipliers)
        spec = self.spec
        w_I = spec.w_I if w_I is None else w_I
        w_B = spec.w_B if w_B is None else w_B
        u = self.net.output(theta, self._int)
        residual, mass, rayleigh = None, None, None
        boundary = augmented = constraint = 0.0
        if self.eigen:
            U = u.value
            mass_t = ad.total(self._wi * U * U)
            mass = float(ad.value(mass_t))
            if mass < MASS_FLOOR:
                raise NumericalError(f"Rayleigh quotient denominator {mass:.3e} is below the floor")
            num = ad.total(self._wi * (u.grad_norm2() + self._v * U * U))
            rayleigh = num / mass_t
            interior = rayleigh
            constraint = spec.w_C * (mass_t - 1.0) ** 2
            if self.augmented:
                constraint = constraint + multipliers.lambda_C * (mass_t - 1.0)
            w_I = 1.0
        elif spec.formulation == "pinn":
            r = pde_residual(u, self._f, self.p)
            interior = ad.total(self._wi * r * r)
        else:
            interior = ad.total(self._wi * energy_density(u, self._f, self.p))
        if self.uses_boundary:
            rb = self.net.output(theta, self._bnd) - self._g
            residual = ad.value(rb)
            pw = self._wb if point_weights is None else self._wb * point_weights
            boundary = ad.total(pw * rb * rb)
            if self.augmented:
                augmented = ad.total(self._wb * multipliers.lambda_boundary * rb)
        total = w_I * interior + w_B * boundary + augmented + constraint
        parts = LossBreakdown(total, interior, boundary, augmented, constraint, rayleigh)
        return parts, residual, mass

    def breakdown(self, theta, multipliers=None, **weights):
        return self.pieces(np.asarray(theta, dtype=float), multipliers, **weights)[0].numeric()

    def value(self, theta, multipliers=None, **weights):
        return self.breakdown(theta, multipliers, **weights).total

    def evaluate(self, theta, multipliers=None, w_I=None, w_B=None, point_weights=None,
                 term_grads=False):
        """Loss, parameter gradient and the quantities the ascent steps need.

        With ``term_grads`` the unweighted interior and boundary gradients
        are returned as well (for the gradient-statistics balancing schemes).
        """
        t = ad.Tensor(np.array(theta, dtype=float))
        parts, residual, mass = self.pieces(t, multipliers, w_I, w_B, point_weights)
        grads = {}
        if term_grads:
            for name in ("interior_term", "boundary_term"):
                term = getattr(parts, name)
                grads[name.split("_")[0]] = (ad.grad(term, [t])[0] if isinstance(term, ad.Tensor)
                                             else np.zeros_like(t.value))
        if isinstance(parts.total, ad.Tensor):
            (g,) = ad.grad(parts.total, [t])
        else:
            g = np.zeros_like(t.value)
        if not np.all(np.isfinite(g)):
            raise NumericalError("non-finite loss gradient")
        return Evaluation(parts.numeric(), g, residual, mass, grads)


# -- functional wrappers ---------------------------------------------------------

def _objective(config, problem, interior, boundary, spec):
    return Objective(network(config), problem, interior, boundary, spec)


def pinn_loss(params, interior, boundary, problem, spec, config, multipliers=None):
    """Weighted squared PDE residual plus boundary penalty (and multiplier term)."""
    if problem.kind not in ("poisson", "p_laplace"):
        raise ConfigurationError("pinn_loss needs a Poisson or p-Laplace problem")
    obj = _objective(config, problem, interior, boundary, replace(spec, formulation="pinn"))
    return obj.pieces(params, multipliers)[0]


def ritz_loss(params, interior, boundary, problem, spec, config, multipliers=None):
    """Weighted energy density plus boundary penalty (and multiplier term)."""
    if problem.kind not in ("poisson", "p_laplace"):
        raise ConfigurationError("ritz_loss needs a Poisson or p-Laplace problem")
    obj = _objective(config, problem, interior, boundary, replace(spec, formulation="ritz"))
    return obj.pieces(params, multipliers)[0]


def rayleigh_loss(params, interior, boundary, problem, spec, config, multipliers=None):
    """Rayleigh quotient with boundary and normalization penalties and multipliers."""
    if problem.kind != "eigen":
        raise ConfigurationError("rayleigh_loss needs an eigenvalue problem")
    if spec.boundary == "augmented" and multipliers is None:
        multipliers = MultiplierState.initial(len(boundary))
    obj = _objective(config, problem, interior, boundary, spec)
    return obj.pieces(params, multipliers)[0]


def augmented_term(params, boundary, problem, multipliers, config):
    """``sum lambda(x) (U(x) - g(x)) w(x)`` over the boundary set."""
    lam = np.asarray(multipliers.lambda_boundary, dtype=float)
    if len(lam) != len(boundary):
        raise ConfigurationError("multiplier count differs from the boundary set size")
    net = network(config)
    rb = net.output(params, net.bind(boundary.points, 0)) - problem.g(boundary.points)
    return ad.total(boundary.weights * lam * rb)


def p_laplace_weight(problem, interior):
    """Interior weight ``1 / int |f|`` that tames the growth of f with p."""
    mass = float(np.sum(interior.weights * np.abs(problem.f(interior.points))))
    if mass <= 0:
        raise ConfigurationError("forcing vanishes on the sample set")
    return 1.0 / mass


# -- error indicators ------------------------------------------------------------

class Indicator:
    """Error indicator E_P or E_R bound to fixed quadrature sets.

    E_P integrates the squared strong residual; E_R takes the absolute
    weak-form residual with U as test function and needs first
    derivatives only. Both add the squared boundary mismatch.
    """

    def __init__(self, net, problem, interior, boundary, kind="EP", p=None):
        if kind not in ("EP", "ER"):
            raise ConfigurationError(f"unknown indicator {kind!r}")
        _check_sets(problem, interior, boundary)
        if boundary.normals is None:
            raise ConfigurationError("indicator needs outward normals on the boundary set")
        self.net, self.kind = net, kind
        self.p = problem.p if p is None else p
        order = 2 if kind == "EP" else 1
        self._int = net.bind(interior.points, order)
        self._bnd = net.bind(boundary.points, 0 if kind == "EP" else 1)
        self._wi, self._wb = interior.weights, boundary.weights
        self._f = problem.f(interior.points)
        self._g = problem.g(boundary.points)
        self._n = boundary.normals

    def __call__(self, theta):
        theta = np.asarray(theta, dtype=float)
        u = self.net.output(theta, self._int)
        ub = self.net.output(theta, self._bnd)
        if self.kind == "EP":
            r = pde_residual(u, self._f, self.p)
            return float(np.sum(self._wi * r * r) + np.sum(self._wb * (ub - self._g) ** 2))
        p = self.p
        n2 = u.grad_norm2()
        flux_int = n2 if p == 2 else np.maximum(n2, GRAD_FLOOR) ** (p / 2)
        weak = np.sum(self._wi * (flux_int - self._f * u.value))
        dn = _flux_factor(ub, p) * ub.directional(self._n)
        weak -= np.sum(self._wb * dn * self._g)
        return float(abs(weak) + np.sum(self._wb * (ub.value - self._g) ** 2))


def indicator_EP(params, problem, quad, config):
    return Indicator(network(config), problem, quad[0], quad[1], "EP")(params)


def indicator_ER(params, problem, quad, config):
    return Indicator(network(config), problem, quad[0], quad[1], "ER")(params)
