"""Manufactured model problems.

Exact solutions are closed-form fields ``u(x)`` taking a coordinate sequence
and written with :mod:`ritzpinn.jets` functions, so the same expression
evaluates on arrays or on jets. Forcings that are not printed in closed form
are synthesized by differentiating the exact solution with jets.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError
from .jets import field_jet, field_values, sin
from .sampling import BoxDomain

PI = np.pi
GRAD_FLOOR = 1e-12


@dataclass(frozen=True)
class Problem:
    """A Dirichlet problem on a box.

    ``kind`` is ``"poisson"``, ``"p_laplace"`` or ``"eigen"``. ``forcing``,
    ``dirichlet`` and ``potential`` map ``(N, d)`` points to ``(N,)`` arrays;
    ``exact`` is a coordinate field (see module docstring).
    """

    name: str
    domain: BoxDomain
    kind: str
    forcing: Callable
    dirichlet: Callable
    exact: Optional[Callable] = None
    p: float = 2.0
    potential: Optional[Callable] = None
    reference_eigenvalue: Optional[float] = None

    @property
    def dim(self):
        return self.domain.dim

    def u(self, points):
        if self.exact is None:
            raise ConfigurationError(f"problem {self.name} has no exact solution")
        return field_values(self.exact, points)

    def f(self, points):
        return self.forcing(np.atleast_2d(points))

    def g(self, points):
        return self.dirichlet(np.atleast_2d(points))

    def v(self, points):
        points = np.atleast_2d(points)
        if self.potential is None:
            return np.zeros(len(points))
        return self.potential(points)


def _zero(points):
    return np.zeros(len(points))


def _from_field(field):
    return lambda points: field_values(field, points)


def p_laplace_forcing(jet, p):
    """``-div(|grad u|^(p-2) grad u)`` from a second-order jet (arrays only)."""
    n2 = np.maximum(jet.grad_norm2(), GRAD_FLOOR)
    return -(n2 ** ((p - 2) / 2) * jet.laplacian()
             + (p - 2) * n2 ** ((p - 4) / 2) * jet.quadratic_form())


def forcing_from_exact(exact, kind="poisson", p=2.0):
    """Forcing that makes ``exact`` solve the PDE of the given kind."""
    if kind == "poisson":
        return lambda points: -field_jet(exact, points, 2).laplacian()
    if kind == "p_laplace":
        return lambda points: p_laplace_forcing(field_jet(exact, points, 2), p)
    raise ConfigurationError(f"no forcing rule for kind {kind!r}")


def _poisson(name, domain, exact, forcing=None):
    return Problem(name=name, domain=domain, kind="poisson",
                   forcing=forcing or forcing_from_exact(exact),
                   dirichlet=_from_field(exact), exact=exact)


def _product_sin(freq):
    def u(x):
        out = 1.0
        for xk in x:
            out = out * sin(freq * PI * xk)
        return out
    return u


def example1(k=1):
    """``sin(k pi x) sin(k pi y)`` on the unit square."""
    if k < 1:
        raise ConfigurationError("k must be a positive integer")
    u = _product_sin(k)
    forcing = lambda pts: 2.0 * (k * PI) ** 2 * field_values(u, pts)
    return _poisson(f"ex1:k={k}", BoxDomain.unit(2), u, forcing)


def _multi(N, dim):
    if N < 1:
        raise ConfigurationError("N must be a positive integer")
    terms = [_product_sin(2 ** ell) for ell in range(1, N + 1)]

    def u(x):
        out = 0.0
        for term in terms:
            out = out + term(x)
        return out * (1.0 / N)

    def forcing(pts):
        out = np.zeros(len(pts))
        for ell, term in enumerate(terms, start=1):
            out += dim * (2 ** ell * PI) ** 2 * field_values(term, pts)
        return out / N

    return u, forcing


def example2(N=6):
    """Multi-frequency average of ``sin(2^l pi x) sin(2^l pi y)``."""
    u, forcing = _multi(N, 2)
    return _poisson(f"ex2:N={N}", BoxDomain.unit(2), u, forcing)


def _layer(A, eps, dim):
    if A <= 0 or eps <= 0:
        raise ConfigurationError("A and eps must be positive")

    def u(x):
        bubble, arg = A, 1.0
        for xk in x:
            bubble = bubble * xk * (1.0 - xk)
            arg = arg * (xk - 0.5)
        return bubble * sin(arg * (1.0 / eps))

    return u


def example3(A=100.0, eps=0.01):
    """High-contrast bubble times an oscillatory interior layer."""
    u = _layer(A, eps, 2)
    return _poisson(f"ex3:A={A:g},eps={eps:g}", BoxDomain.unit(2), u)


def example_3d(variant="osc", k=4, N=2, A=100.0, eps=0.01):
    """Unit-cube versions of the three examples."""
    cube = BoxDomain.unit(3)
    if variant == "osc":
        u = _product_sin(k)
        forcing = lambda pts: 3.0 * (k * PI) ** 2 * field_values(u, pts)
        return _poisson(f"3d-osc:k={k}", cube, u, forcing)
    if variant == "multi":
        u, forcing = _multi(N, 3)
        return _poisson(f"3d-multi:N={N}", cube, u, forcing)
    if variant == "layer":
        return _poisson(f"3d-layer:A={A:g},eps={eps:g}", cube, _layer(A, eps, 3))
    raise ConfigurationError(f"unknown 3-d variant {variant!r}")


def p_laplace_example(p=3.0):
    """``-div(|grad u|^(p-2) grad u) = f`` with ``u = sin(2 pi x) sin(2 pi y)``."""
    if not p > 2:
        raise ConfigurationError("the p-Laplacian example needs p > 2")
    u = _product_sin(2)
    return Problem(name=f"plap:p={p:g}", domain=BoxDomain.unit(2), kind="p_laplace",
                   forcing=forcing_from_exact(u, "p_laplace", p),
                   dirichlet=_from_field(u), exact=u, p=float(p))


def eigen_well():
    """Dirichlet Laplacian on the unit square; lowest eigenvalue 2 pi^2."""
    u = lambda x: 2.0 * sin(PI * x[0]) * sin(PI * x[1])  # unit L2 norm
    return Problem(name="eig-well", domain=BoxDomain.unit(2), kind="eigen",
                   forcing=_zero, dirichlet=_zero, exact=u,
                   reference_eigenvalue=2.0 * PI ** 2)


def eigen_oscillator():
    """Harmonic oscillator ``-Lap u + |x|^2 u`` on (-3, 3)^2; reference eigenvalue 2."""
    return Problem(name="eig-osc", domain=BoxDomain(((-3.0, 3.0), (-3.0, 3.0))), kind="eigen",
                   forcing=_zero, dirichlet=_zero,
                   potential=lambda pts: np.sum(pts * pts, axis=1),
                   reference_eigenvalue=2.0)


def _parse_args(text):
    args = {}
    if text:
        for part in text.split(","):
            key, _, val = part.partition("=")
            if not _:
                raise ConfigurationError(f"malformed problem argument {part!r}")
            args[key.strip()] = float(val)
    return args


def make_problem(spec):
    """Build a problem from its string id, e.g. ``"ex3:A=100,eps=0.01"``."""
    head, _, rest = spec.partition(":")
    args = _parse_args(rest)

    def integer(key, default):
        val = args.get(key, default)
        if val != int(val):
            raise ConfigurationError(f"{key} must be an integer in {spec!r}")
        return int(val)

    if head == "ex1":
        return example1(integer("k", 1))
    if head == "ex2":
        return example2(integer("N", 6))
    if head == "ex3":
        return example3(args.get("A", 100.0), args.get("eps", 0.01))
    if head == "3d-osc":
        return example_3d("osc", k=integer("k", 4))
    if head == "3d-multi":
        return example_3d("multi", N=integer("N", 2))
    if head == "3d-layer":
        return example_3d("layer", A=args.get("A", 100.0), eps=args.get("eps", 0.01))
    if head == "plap":
        return p_laplace_example(args.get("p", 3.0))
    if head == "eig-well":
        return eigen_well()
    if head == "eig-osc":
        return eigen_oscillator()
    raise ConfigurationError(f"unknown problem {spec!r}")


PROBLEM_IDS = ("ex1:k=4", "ex2:N=6", "ex3:A=100,eps=0.01", "3d-osc:k=4", "3d-multi:N=2",
               "3d-layer:A=100,eps=0.01", "plap:p=5", "eig-well", "eig-osc")
