"""Experiment runner: configs, training runs, sweeps, landscapes and output files."""

from .config import ExperimentConfig, parse_axis
from .io import read_checkpoint, write_checkpoint
from .landscape import Landscape, loss_landscape
from .report import Cell, Report, sweep
from .train import RunResult, build, relative_l2, train

__all__ = [
    "Cell", "ExperimentConfig", "Landscape", "Report", "RunResult", "build", "loss_landscape",
    "parse_axis", "read_checkpoint", "relative_l2", "sweep", "train", "write_checkpoint",
]
