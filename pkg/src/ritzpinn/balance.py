"""Loss-weight balancing schemes.

``constant`` and ``augmented`` keep ``w_I`` and ``w_B`` fixed (the
augmented Lagrangian balances through its multipliers, which the optimizer
owns). ``self_adaptive`` learns one weight per boundary point by Adam
ascent. ``inverse_dirichlet`` and ``grad_norm`` move both term weights
towards a target computed from per-term parameter gradients, with an
exponential moving average.
"""

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import ConfigurationError

SCHEMES = ("constant", "self_adaptive", "inverse_dirichlet", "grad_norm", "augmented")
ALIASES = {"sa": "self_adaptive", "invdir": "inverse_dirichlet", "gradnorm": "grad_norm"}
EMA_ALPHA = {"inverse_dirichlet": 0.5, "grad_norm": 0.9}
DEGENERATE = 1e-30

SA_LR, SA_BETA1, SA_BETA2, SA_EPS = 1.0, 0.9, 0.999, 1e-8


def scheme_name(name):
    name = ALIASES.get(name, name)
    if name not in SCHEMES:
        raise ConfigurationError(f"unknown balancing scheme {name!r}")
    return name


@dataclass(frozen=True)
class BalanceState:
    """Current loss weights.

    ``pointwise`` holds the self-adaptive boundary weights with their Adam
    moments ``m``, ``v`` and step count ``t``.
    """

    scheme: str
    w: dict
    ema_alpha: Optional[float] = None
    pointwise: Optional[np.ndarray] = None
    m: Optional[np.ndarray] = None
    v: Optional[np.ndarray] = None
    t: int = 0

    @property
    def w_I(self):
        return self.w["I"]

    @property
    def w_B(self):
        return self.w["B"]

    @property
    def needs_term_grads(self):
        return self.scheme in EMA_ALPHA


def init_balance(scheme, w_I=1.0, w_B=1.0, boundary_size=0):
    scheme = scheme_name(scheme)
    if scheme in EMA_ALPHA:
        # both schemes start from w^(0) = 1
        return BalanceState(scheme, {"I": 1.0, "B": 1.0}, EMA_ALPHA[scheme])
    if scheme == "self_adaptive":
        if boundary_size < 1:
            raise ConfigurationError("self-adaptive weights need a boundary set")
        z = np.zeros(boundary_size)
        return BalanceState(scheme, {"I": float(w_I), "B": float(w_B)},
                            pointwise=np.ones(boundary_size), m=z, v=z.copy())
    return BalanceState(scheme, {"I": float(w_I), "B": float(w_B)})


def self_adaptive_update(state, boundary_residuals, step=None):
    """One Adam ascent step on ``sum lambda_B(x) r(x)^2``; the gradient is ``r^2``."""
    if state.scheme != "self_adaptive":
        raise ConfigurationError("state is not self-adaptive")
    r = np.asarray(boundary_residuals, dtype=float)
    if r.shape != state.pointwise.shape:
        raise ConfigurationError("residual count differs from the boundary weight count")
    t = state.t + 1 if step is None else int(step)
    g = r * r
    m = SA_BETA1 * state.m + (1 - SA_BETA1) * g
    v = SA_BETA2 * state.v + (1 - SA_BETA2) * g * g
    m_hat = m / (1 - SA_BETA1 ** t)
    v_hat = v / (1 - SA_BETA2 ** t)
    lam = state.pointwise + SA_LR * m_hat / (np.sqrt(v_hat) + SA_EPS)
    return replace(state, pointwise=lam, m=m, v=v, t=t)


def _ema(state, target):
    a = state.ema_alpha
    w = {k: a * state.w[k] + (1 - a) * target[k] for k in state.w}
    return replace(state, w=w, t=state.t + 1)


def inverse_dirichlet_update(state, grad_I, grad_B):
    """Target ``max_k std(grad J_k) / std(grad J_k)`` (population std)."""
    if state.scheme != "inverse_dirichlet":
        raise ConfigurationError("state is not inverse-Dirichlet")
    std = {"I": float(np.std(grad_I)), "B": float(np.std(grad_B))}
    top = max(std.values())
    target = {k: (top / s if s >= DEGENERATE else state.w[k]) for k, s in std.items()}
    return _ema(state, target)


def grad_norm_update(state, grad_terms):
    """Target ``||sum_k grad J_k|| / ||grad J_k||`` for ``grad_terms = (grad_I, grad_B)``."""
    if state.scheme != "grad_norm":
        raise ConfigurationError("state is not gradient-norm")
    grad_I, grad_B = (np.asarray(g, dtype=float) for g in grad_terms)
    total = float(np.linalg.norm(grad_I + grad_B))
    norms = {"I": float(np.linalg.norm(grad_I)), "B": float(np.linalg.norm(grad_B))}
    target = {k: (total / n if n >= DEGENERATE else state.w[k]) for k, n in norms.items()}
    return _ema(state, target)


def update(state, evaluation):
    """Advance ``state`` from one training evaluation (see :class:`ritzpinn.loss.Evaluation`)."""
    if state.scheme == "self_adaptive":
        return self_adaptive_update(state, evaluation.residual)
    if state.scheme == "inverse_dirichlet":
        tg = evaluation.term_grads
        return inverse_dirichlet_update(state, tg["interior"], tg["boundary"])
    if state.scheme == "grad_norm":
        tg = evaluation.term_grads
        return grad_norm_update(state, (tg["interior"], tg["boundary"]))
    return state
