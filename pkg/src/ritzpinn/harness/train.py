"""Single training runs: assembly, indicator checkpointing, error metrics."""

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .. import balance as bal
from .._runtime import tune_allocator
from ..errors import ConfigurationError, NumericalError
from ..jets import sin
from ..loss import Indicator, LossSpec, Objective, p_laplace_weight
from ..net import Ansatz, Network, NetworkConfig, RFFConfig
from ..optim import Schedule, run_schedule
from ..problems import make_problem
from ..sampling import gauss_boundary, gauss_interior, mc_boundary, mc_interior, uniform_grid
from .config import ANSATZ_PATTERN, OPTIMIZERS, SCHEMES

EIGEN_WINDOW = 10_000
G_TOLERANCE = 1e-12  # sin(pi) is 1.2e-16 in floating point


@dataclass
class RunResult:
    """Outcome of one seed.

    For eigenvalue runs ``rel_l2`` compares the sign-aligned, rescaled
    network with the normalized eigenfunction (NaN without one) and
    ``eigen_error`` is the relative error of ``eigen_estimate``.
    """

    seed: int
    rel_l2: float
    best_indicator: float
    best_epoch: int
    wall_seconds: float
    diverged: bool = False
    eigen_estimate: Optional[float] = None
    eigen_error: Optional[float] = None
    final_rel_l2: float = float("nan")
    epochs: int = 0
    params: Optional[np.ndarray] = field(default=None, repr=False)
    multipliers: Optional[object] = field(default=None, repr=False)  # at the checkpoint
    history: list = field(default_factory=list, repr=False)  # (epoch, indicator)

    @property
    def error(self):
        """The figure of merit a report aggregates."""
        return self.eigen_error if self.eigen_error is not None else self.rel_l2


# -- assembly --------------------------------------------------------------------

def make_ansatz(name, domain):
    """``A = 0`` with ``G`` the box bubble or a product of sines vanishing on the boundary."""
    match = ANSATZ_PATTERN.match(name or "")
    if not match:
        raise ConfigurationError(f"unknown ansatz {name!r}")
    lo, hi = domain.lower, domain.upper
    if match.group(1) == "bubble":
        def G(x):
            out = 1.0
            for k, xk in enumerate(x):
                out = out * ((xk - lo[k]) * (hi[k] - xk))
            return out
    else:
        freq = int(match.group(2))
        if freq < 1:
            raise ConfigurationError("sine ansatz frequency must be positive")

        def G(x):
            out = 1.0
            for k, xk in enumerate(x):
                out = out * sin(freq * np.pi * (xk - lo[k]) / (hi[k] - lo[k]))
            return out
    return Ansatz(A=lambda x: 0.0, G=G)


def network_config(cfg, problem):
    s = cfg.network
    rff = None if s.rff is None else RFFConfig(s.rff.m, s.rff.sigma, s.rff.seed)
    ansatz = None
    if s.ansatz is not None:
        pts = gauss_boundary(problem.domain, 8).points
        if np.max(np.abs(problem.g(pts))) > G_TOLERANCE:
            raise ConfigurationError("the built-in ansatz functions assume g = 0")
        ansatz = make_ansatz(s.ansatz, problem.domain)
    return NetworkConfig(problem.dim, s.depth, s.width, s.activation, rff, ansatz)


def sample_sets(cfg, problem, seed):
    """Training sets and the Gauss sets used by the indicator."""
    s = cfg.sampler
    domain = problem.domain
    quad = gauss_interior(domain, s.n_G), gauss_boundary(domain, s.n_G)
    if SCHEMES[s.scheme] == "gauss":
        return quad, quad
    n_int = s.interior or len(quad[0])
    n_bnd = s.boundary or len(quad[1])
    si, sb = np.random.SeedSequence([s.seed, seed]).spawn(2)
    train = mc_interior(domain, n_int, si), mc_boundary(domain, n_bnd, sb)
    return train, quad


def loss_spec(cfg, problem, interior):
    s = cfg.loss
    w_I = s.w_I
    if w_I == "auto":
        w_I = p_laplace_weight(problem, interior) if problem.kind == "p_laplace" else 1.0
    p = problem.p if problem.kind == "p_laplace" else s.p
    return LossSpec(s.formulation, cfg.boundary_mode, float(w_I), float(s.w_B), float(s.w_C), p)


def schedule(cfg):
    o = cfg.optimizer
    return Schedule(OPTIMIZERS[o.kind], o.T, o.T_A, o.lr, o.alpha)


@dataclass
class Setup:
    """Everything a run needs, built once per (config, seed)."""

    problem: object
    net: Network
    objective: Objective
    indicator: Optional[Indicator]
    quadrature: tuple


def build(cfg, seed):
    problem = make_problem(cfg.problem)
    net = Network(network_config(cfg, problem))
    (interior, boundary), quad = sample_sets(cfg, problem, seed)
    spec = loss_spec(cfg, problem, quad[0])
    objective = Objective(net, problem, interior,
                          None if spec.boundary == "hard" else boundary, spec)
    indicator = None
    if problem.kind != "eigen":
        indicator = Indicator(net, problem, quad[0], quad[1], cfg.indicator_kind)
    return Setup(problem, net, objective, indicator, quad)


# -- metrics ---------------------------------------------------------------------

def _as_network(net):
    return net if isinstance(net, Network) else Network(net)


def relative_l2(params, problem, resolution, net, normalize=False):
    """``||U - u*|| / ||u*||`` over the uniform grid with endpoints.

    With ``normalize`` (eigenfunctions) ``U`` is first rescaled to the norm
    of ``u*`` with the sign of their inner product.
    """
    if problem.exact is None:
        raise ConfigurationError(f"{problem.name} has no exact solution")
    points = uniform_grid(problem.domain, resolution)
    exact = problem.u(points)
    ref = np.linalg.norm(exact)
    if ref == 0:
        raise ConfigurationError("exact solution vanishes on the test grid")
    U = _as_network(net).forward(params, points)
    if normalize:
        size = np.linalg.norm(U)
        if size > 0:
            U = U * (np.sign(U @ exact) or 1.0) * ref / size
    return float(np.linalg.norm(U - exact) / ref)


def _error(problem, params, resolution, net):
    if problem.exact is None:
        return float("nan")
    return relative_l2(params, problem, resolution, net, normalize=problem.kind == "eigen")


# -- training --------------------------------------------------------------------

def train(cfg, seed, setup=None, callback=None):
    """Train one seed and report the best-indicator checkpoint.

    The indicator runs every ``indicator_period`` epochs and once more on the
    final parameters; the parameters with the smallest value are kept.
    Eigenvalue runs instead average the Rayleigh quotient over the trailing
    ``min(10000, T)`` epochs and report the final parameters.
    """
    tune_allocator()
    setup = setup or build(cfg, seed)
    problem, net, obj = setup.problem, setup.net, setup.objective
    eigen = problem.kind == "eigen"
    theta0 = net.init_glorot(seed)
    state = bal.init_balance(cfg.balance if cfg.balance != "augmented" else "constant",
                             obj.spec.w_I, obj.spec.w_B, obj.boundary_size)
    multipliers = obj.initial_multipliers() if obj.augmented else None
    box = {"state": state, "mult": multipliers}
    weights = obj.boundary.weights if obj.augmented else None

    def evaluate(theta, mult):
        box["mult"] = mult
        s = box["state"]
        return obj.evaluate(theta, mult, w_I=s.w_I, w_B=s.w_B, point_weights=s.pointwise,
                            term_grads=s.needs_term_grads)

    def after(ev):
        s = box["state"]
        if s.scheme == "constant":
            return False
        box["state"] = bal.update(s, ev)
        return True

    best = {"value": np.inf, "epoch": 0, "params": theta0.copy(), "mult": multipliers}
    history, rayleigh = [], []

    def check(epoch, theta, mult):
        try:
            value = setup.indicator(theta)
        except NumericalError:
            value = float("nan")
        history.append((epoch, value))
        if value < best["value"]:  # False for NaN
            best.update(value=value, epoch=epoch, params=np.array(theta),
                        mult=None if mult is None else mult.copy())

    def monitor(epoch, theta, ev):
        if eigen:
            rayleigh.append(ev.breakdown.rayleigh)
        elif epoch % cfg.indicator_period == 0:
            check(epoch, theta, box["mult"])
        return callback(epoch, theta, ev) if callback is not None else False

    start = time.perf_counter()
    out = run_schedule(schedule(cfg), theta0, evaluate, multipliers, weights, after, monitor)
    final = out.params
    diverged = out.diverged or not np.all(np.isfinite(final))
    if eigen:
        if not rayleigh:
            rayleigh.append(obj.breakdown(final, out.multipliers).rayleigh)
        window = rayleigh[-min(EIGEN_WINDOW, len(rayleigh)):]
        estimate = float(np.mean(window))
        best.update(value=float("nan"), epoch=out.epochs, params=np.array(final),
                    mult=out.multipliers)
    elif not diverged:
        check(out.epochs, final, out.multipliers)
    wall = time.perf_counter() - start

    res = cfg.grid_resolution(problem.dim)
    result = RunResult(seed=seed, rel_l2=float("nan"), best_indicator=float(best["value"]),
                       best_epoch=int(best["epoch"]), wall_seconds=wall, diverged=diverged,
                       epochs=out.epochs, params=best["params"], multipliers=best["mult"],
                       history=history)
    if np.all(np.isfinite(best["params"])):
        result.rel_l2 = _error(problem, best["params"], res, net)
    if np.all(np.isfinite(final)):
        result.final_rel_l2 = _error(problem, final, res, net)
    if eigen:
        result.eigen_estimate = estimate
        mu0 = problem.reference_eigenvalue
        result.eigen_error = abs(estimate - mu0) / abs(mu0)
        if not np.isfinite(estimate):
            result.diverged = True
    return result
