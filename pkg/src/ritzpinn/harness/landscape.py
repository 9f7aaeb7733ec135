"""Two-dimensional loss-landscape slices around trained parameters."""

from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass
class Landscape:
    alphas: np.ndarray
    betas: np.ndarray
    loss: np.ndarray  # (n_alpha, n_beta)
    rel_l2: Optional[np.ndarray] = None
    zeta: Optional[np.ndarray] = None
    gamma: Optional[np.ndarray] = None


def normalized_direction(params, layer_slices, rng):
    """Gaussian direction rescaled so every layer has the norm of that layer of ``params``."""
    params = np.asarray(params, dtype=float)
    d = rng.standard_normal(params.shape)
    out = np.zeros_like(params)
    for sl in layer_slices:
        norm = np.linalg.norm(d[sl])
        if norm > 0:
            out[sl] = d[sl] / norm * np.linalg.norm(params[sl])
    return out


def loss_landscape(best_params, loss_evaluator, layer_slices, grid=(51, 51), extent=1.0,
                   direction_seed=0, error_evaluator=None):
    """Evaluate ``loss(theta* + a zeta + b gamma)`` on a symmetric ``(a, b)`` grid.

    ``layer_slices`` partitions the flat parameter vector by layer (see
    :meth:`ritzpinn.net.ParamLayout.layer_slices`). With ``error_evaluator``
    a companion grid of relative errors is filled in as well.
    """
    theta = np.asarray(best_params, dtype=float)
    rng = np.random.default_rng(direction_seed)
    zeta = normalized_direction(theta, layer_slices, rng)
    gamma = normalized_direction(theta, layer_slices, rng)
    alphas = np.linspace(-extent, extent, grid[0])
    betas = np.linspace(-extent, extent, grid[1])
    loss = np.empty((len(alphas), len(betas)))
    err = None if error_evaluator is None else np.empty_like(loss)
    for i, a in enumerate(alphas):
        for j, b in enumerate(betas):
            point = theta + a * zeta + b * gamma if (a or b) else theta
            loss[i, j] = _safe(loss_evaluator, point)
            if err is not None:
                err[i, j] = _safe(error_evaluator, point)
    return Landscape(alphas, betas, loss, err, zeta, gamma)


def _safe(fn, x):
    try:
        value = float(fn(x))
    except ArithmeticError:
        return float("nan")
    return value
