"""Neural-network solvers for elliptic boundary value problems.

The library trains small fully connected networks on Poisson, p-Laplace and
eigenvalue problems with PINN or deep Ritz losses, soft/hard/augmented
boundary treatment, Monte-Carlo or Gauss-Legendre collocation, several
loss-balancing rules and Adam/L-BFGS optimizers. :mod:`ritzpinn.harness`
runs experiments built from a JSON config.
"""

from .errors import ConfigurationError, NumericalError
from .loss import (Indicator, LossBreakdown, LossSpec, MultiplierState, Objective,
                   augmented_term, indicator_EP, indicator_ER, pinn_loss, rayleigh_loss,
                   ritz_loss)
from .net import Ansatz, Network, NetworkConfig, RFFConfig, forward, forward_jet, grad_params, init_glorot
from .optim import Schedule, adam_step, ascent_step, lbfgs_step, run_schedule
from .problems import make_problem
from .sampling import BoxDomain, SampleSet, gauss_boundary, gauss_interior, gauss_legendre, mc_boundary, mc_interior

__all__ = [
    "Ansatz", "BoxDomain", "ConfigurationError", "Indicator", "LossBreakdown", "LossSpec",
    "MultiplierState", "Network", "NetworkConfig", "NumericalError", "Objective", "RFFConfig",
    "SampleSet", "Schedule", "adam_step", "ascent_step", "augmented_term", "forward",
    "forward_jet", "gauss_boundary", "gauss_interior", "gauss_legendre", "grad_params",
    "indicator_EP", "indicator_ER", "init_glorot", "lbfgs_step", "make_problem",
    "mc_boundary", "mc_interior", "pinn_loss", "rayleigh_loss", "ritz_loss", "run_schedule",
]
