"""Seed aggregation and parameter sweeps."""

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List

import numpy as np

from .config import apply_overrides, parse_axis
from .train import train


@dataclass
class Cell:
    """One config variant and its per-seed results (sorted by seed)."""

    cell_id: str
    settings: dict
    results: List = field(default_factory=list)

    @property
    def converged(self):
        return [r for r in self.results if not r.diverged and np.isfinite(r.error)]

    @property
    def n_converged(self):
        return len(self.converged)

    @property
    def n_diverged(self):
        return len(self.results) - self.n_converged

    @property
    def mean(self):
        vals = [r.error for r in self.converged]
        return float(np.mean(vals)) if vals else None

    @property
    def std(self):
        """Population standard deviation over the converged seeds."""
        vals = [r.error for r in self.converged]
        return float(np.std(vals)) if vals else None

    @property
    def wall_mean(self):
        vals = [r.wall_seconds for r in self.results]
        return float(np.mean(vals)) if vals else None


@dataclass
class Report:
    """Cells in axis order. ``axes`` holds ``(name, values)`` pairs."""

    cells: List[Cell] = field(default_factory=list)
    axes: List = field(default_factory=list)

    CSV_HEADER = ("cell-id", "mean_rel_l2", "std_rel_l2", "n_converged", "wall_mean_s")

    def rows(self):
        """Cells grouped by every axis but the last (one group when there is one axis)."""
        if len(self.axes) < 2:
            return [self.cells] if self.cells else []
        width = len(self.axes[-1][1])
        return [self.cells[i:i + width] for i in range(0, len(self.cells), width)]

    def row_minima(self):
        """Cell ids holding the smallest mean in each row."""
        marked = set()
        for row in self.rows():
            means = [(c.mean, c.cell_id) for c in row if c.mean is not None]
            if means:
                marked.add(min(means)[1])
        return marked

    def csv_rows(self):
        out = []
        for c in self.cells:
            out.append((c.cell_id, _num(c.mean), _num(c.std), str(c.n_converged),
                        _num(c.wall_mean, "{:.3f}")))
        return out

    def to_text(self):
        """Fixed-width table; ``*`` marks the per-row minimum, ``-`` an all-diverged cell."""
        best = self.row_minima()
        lines = [f"{'cell':<40} {'mean':>12} {'std':>12} {'conv':>5} {'div':>4} {'wall[s]':>9}"]
        for c in self.cells:
            mean = "-" if c.mean is None else f"{c.mean:.3e}"
            std = "-" if c.std is None else f"{c.std:.3e}"
            mark = "*" if c.cell_id in best else " "
            wall = "-" if c.wall_mean is None else f"{c.wall_mean:.1f}"
            lines.append(f"{c.cell_id:<40} {mean:>12}{mark}{std:>12} {c.n_converged:>5} "
                         f"{c.n_diverged:>4} {wall:>9}")
        return "\n".join(lines) + "\n"


def _num(x, fmt="{:.6e}"):
    return "-" if x is None else fmt.format(x)


def cell_id(settings):
    return ";".join(f"{name}={value}" for name, value in settings) or "base"


def _run_one(job):
    cfg, seed = job
    return train(cfg, seed)


def sweep(cfg, axes=(), seeds=None, workers=1, progress=None):
    """Cartesian product of ``axes`` (strings like ``"wB=1,10"``) times seeds.

    Results do not depend on ``workers`` or completion order: every run is
    keyed by (cell, seed) and cells list their seeds in ascending order.
    """
    parsed = [parse_axis(a) if isinstance(a, str) else a for a in axes]
    seeds = sorted(cfg.seeds if seeds is None else seeds)
    variants = []
    for combo in itertools.product(*[values for _, _, values in parsed]):
        named = [(name, v) for (name, _, _), v in zip(parsed, combo)]
        paths = [(path, v) for (_, path, _), v in zip(parsed, combo)]
        variants.append((cell_id(named), dict(named), apply_overrides(cfg, paths)))
    jobs = [(variant, seed) for _, _, variant in variants for seed in seeds]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = []
            for job, result in zip(jobs, pool.map(_run_one, jobs)):
                results.append(result)
                if progress is not None:
                    progress(job, result)
    else:
        results = []
        for job in jobs:
            results.append(_run_one(job))
            if progress is not None:
                progress(job, results[-1])
    report = Report(axes=[(name, values) for name, _, values in parsed])
    it = iter(results)
    for cid, named, _ in variants:
        cell = Cell(cid, named, [next(it) for _ in seeds])
        cell.results.sort(key=lambda r: r.seed)
        report.cells.append(cell)
    return report
