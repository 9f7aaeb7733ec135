"""Optimizers and the epoch loop.

One epoch is one full-batch step. Network parameters descend with Adam or
L-BFGS; Lagrange multipliers ascend with a plain gradient step, and both
use derivatives taken at the same (pre-step) point.
"""

from collections import deque
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import ConfigurationError, NumericalError
from .loss import MultiplierState

CURVATURE_MIN = 1e-12
ARMIJO_C1 = 1e-4
MAX_HALVINGS = 30
FALLBACK_STEP = 1e-3
MAX_FAILURES = 30


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros(cls, size, **hyper):
        return cls(np.zeros(size), np.zeros(size), **hyper)


def adam_step(state, params, grad):
    """Bias-corrected Adam; returns the new state and new parameters."""
    grad = np.asarray(grad, dtype=float)
    if not np.all(np.isfinite(grad)):
        raise NumericalError("non-finite gradient passed to Adam")
    t = state.t + 1
    m = state.beta1 * state.m + (1 - state.beta1) * grad
    v = state.beta2 * state.v + (1 - state.beta2) * grad * grad
    m_hat = m / (1 - state.beta1 ** t)
    v_hat = v / (1 - state.beta2 ** t)
    new = params - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    if not np.all(np.isfinite(new)):
        raise NumericalError("non-finite Adam update")
    return replace(state, m=m, v=v, t=t), new


def ascent_step(multipliers, constraint_values, weights, alpha=1.0, mass=None):
    """``lambda(x) += alpha w(x) (U(x) - g(x))``; ``lambda_C += alpha (int U^2 - 1)`` if ``mass`` given."""
    r = np.asarray(constraint_values, dtype=float)
    lam = multipliers.lambda_boundary + alpha * np.asarray(weights, dtype=float) * r
    lam_c = multipliers.lambda_C
    if mass is not None:
        lam_c = lam_c + alpha * (mass - 1.0)
    return MultiplierState(lam, float(lam_c))


@dataclass
class LBFGSState:
    memory: int = 10
    pairs: deque = field(default_factory=deque)
    x: Optional[np.ndarray] = None
    f: Optional[float] = None
    g: Optional[np.ndarray] = None
    failures: int = 0
    diverged: bool = False

    def invalidate(self):
        """Forget the cached loss at ``x`` (the objective changed)."""
        self.f = None
        self.g = None

    def clear(self):
        self.pairs.clear()


def _two_loop(pairs, g):
    q = g.copy()
    alphas = []
    for s, y, rho in reversed(pairs):
        a = rho * (s @ q)
        q -= a * y
        alphas.append(a)
    if pairs:
        s, y, _ = pairs[-1]
        q *= (s @ y) / (y @ y)
    for (s, y, rho), a in zip(pairs, reversed(alphas)):
        b = rho * (y @ q)
        q += (a - b) * s
    return -q


def _damped(pairs, s, y):
    """Powell damping against the scaled identity ``B0 = I / gamma``.

    An Armijo-only search does not guarantee positive curvature, so pairs
    with small ``s.y`` are blended towards ``B0 s`` instead of dropped.
    """
    gamma = 1.0
    if pairs:
        s0, y0, _ = pairs[-1]
        gamma = (s0 @ y0) / (y0 @ y0)
    bs = s / gamma
    sbs = s @ bs
    sy = s @ y
    if sy < 0.2 * sbs:
        t = 0.8 * sbs / (sbs - sy)
        y = t * y + (1.0 - t) * bs
    return s, y


def _try(loss_evaluator, x):
    try:
        f, g = loss_evaluator(x)
    except NumericalError:
        return None
    if not (np.isfinite(f) and np.all(np.isfinite(g))):
        return None
    return float(f), np.asarray(g, dtype=float)


def lbfgs_step(state, params, loss_evaluator):
    """One L-BFGS iteration with Armijo backtracking from the unit step.

    ``loss_evaluator(x)`` returns ``(loss, grad)``. When no step passes the
    Armijo test after 30 halvings a plain gradient step of length 0.001 is
    taken and the memory cleared; 30 such failures in a row set
    ``state.diverged``.
    """
    x = np.array(params, dtype=float)
    if state.f is None or state.x is None or not np.array_equal(state.x, x):
        first = _try(loss_evaluator, x)
        if first is None:
            raise NumericalError("loss is not finite at the current L-BFGS iterate")
        state.x, (state.f, state.g) = x, first
    f, g = state.f, state.g
    if not np.any(g):
        return state, x
    d = _two_loop(state.pairs, g)
    slope = g @ d
    if not slope < 0:
        state.clear()
        d, slope = -g, -(g @ g)
    step, accepted = 1.0, None
    for _ in range(MAX_HALVINGS + 1):
        trial = x + step * d
        out = _try(loss_evaluator, trial)
        if out is not None and out[0] <= f + ARMIJO_C1 * step * slope:
            accepted = trial, out
            break
        step *= 0.5
    if accepted is None:
        state.failures += 1
        state.clear()
        trial = x - FALLBACK_STEP * g
        out = _try(loss_evaluator, trial)
        if out is None or state.failures >= MAX_FAILURES:
            state.diverged = True
            if out is None:
                return state, x
        state.x, (state.f, state.g) = trial, out
        return state, trial
    state.failures = 0
    trial, (f_new, g_new) = accepted
    s, y = _damped(state.pairs, trial - x, g_new - g)
    sy = s @ y
    if sy > CURVATURE_MIN:
        state.pairs.append((s, y, 1.0 / sy))
        while len(state.pairs) > state.memory:
            state.pairs.popleft()
    state.x, state.f, state.g = trial, f_new, g_new
    return state, trial


@dataclass(frozen=True)
class Schedule:
    kind: str = "adam"
    T: int = 1000
    T_A: Optional[int] = None
    lr: float = 1e-3
    alpha: float = 1.0

    def __post_init__(self):
        if self.kind not in ("adam", "lbfgs", "adam_then_lbfgs"):
            raise ConfigurationError(f"unknown schedule {self.kind!r}")
        if self.T < 0:
            raise ConfigurationError("T must be nonnegative")
        if self.kind == "adam_then_lbfgs" and not (self.T_A is not None and 0 < self.T_A < self.T):
            raise ConfigurationError("the hybrid schedule needs 0 < T_A < T")

    def optimizer_at(self, epoch):
        if self.kind == "adam":
            return "adam"
        if self.kind == "lbfgs":
            return "lbfgs"
        return "adam" if epoch < self.T_A else "lbfgs"


@dataclass
class ScheduleResult:
    params: np.ndarray
    multipliers: Optional[MultiplierState]
    adam_steps: int = 0
    lbfgs_steps: int = 0
    ascent_steps: int = 0
    epochs: int = 0
    diverged: bool = False


def run_schedule(schedule, params, evaluate, multipliers=None, boundary_weights=None,
                 after_evaluation=None, callback=None):
    """Run ``schedule.T`` epochs.

    ``evaluate(params, multipliers)`` returns a :class:`ritzpinn.loss.Evaluation`.
    ``after_evaluation(evaluation)`` lets a balancing scheme update its weights
    and returns True when it changed the objective. ``callback(epoch, params,
    evaluation)`` sees the pre-step state of every epoch and may return True
    to stop. With ``multipliers`` the multipliers ascend every epoch using
    the residuals of the same evaluation that drives the parameter step.
    """
    theta = np.array(params, dtype=float)
    out = ScheduleResult(theta, multipliers)
    adam = AdamState.zeros(len(theta), lr=schedule.lr)
    lbfgs = LBFGSState()
    current = None  # evaluation at theta under the current weights/multipliers
    for epoch in range(schedule.T):
        try:
            if schedule.optimizer_at(epoch) == "adam":
                ev = evaluate(theta, multipliers)
                if callback is not None and callback(epoch, theta, ev):
                    break
                adam, theta = adam_step(adam, theta, ev.grad)
                out.adam_steps += 1
                current = None
            else:
                ev = current if current is not None else evaluate(theta, multipliers)
                if callback is not None and callback(epoch, theta, ev):
                    break
                last = [ev]

                def f_and_g(x):
                    e = evaluate(x, multipliers)
                    last[0] = e
                    return e.breakdown.total, e.grad

                lbfgs.x, lbfgs.f, lbfgs.g = theta, ev.breakdown.total, ev.grad
                lbfgs, theta = lbfgs_step(lbfgs, theta, f_and_g)
                current = last[0]
                out.lbfgs_steps += 1
                if lbfgs.diverged:
                    out.diverged = True
                    out.epochs = epoch + 1
                    break
        except NumericalError:
            out.diverged = True
            out.epochs = epoch
            break
        changed = False
        if multipliers is not None and ev.residual is not None:
            multipliers = ascent_step(multipliers, ev.residual, boundary_weights,
                                      schedule.alpha, ev.mass)
            out.ascent_steps += 1
            changed = True
        if after_evaluation is not None:
            changed = after_evaluation(ev) or changed
        if changed:
            current = None
        out.epochs = epoch + 1
    out.params, out.multipliers = theta, multipliers
    return out
