"""Command line: ``run``, ``sweep`` and ``landscape``."""

import argparse
import sys
from pathlib import Path

import numpy as np

from ..errors import ConfigurationError, NumericalError
from . import io
from .config import ExperimentConfig, with_epochs, with_seeds
from .landscape import loss_landscape
from .report import sweep
from .train import build, relative_l2


def _seeds(text):
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"seeds must be comma-separated integers: {text!r}")


def _config(args):
    cfg = ExperimentConfig.load(args.config)
    if args.seeds is not None:
        cfg = with_seeds(cfg, args.seeds)
    if args.epochs is not None:
        cfg = with_epochs(cfg, args.epochs)
    return cfg


def _out(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _progress(job, result):
    cfg, seed = job
    err = result.error
    tag = "diverged" if result.diverged else f"error {err:.3e}"
    print(f"  seed {seed}: {tag}, best epoch {result.best_epoch}, "
          f"{result.wall_seconds:.1f} s", file=sys.stderr, flush=True)


def _write_report(report, out):
    io.write_report_csv(report, out / "report.csv")
    text = report.to_text()
    (out / "report.txt").write_text(text, encoding="utf-8")
    sys.stdout.write(text)


def cmd_run(args):
    cfg = _config(args)
    out = _out(args)
    cfg.dump(out / "config.json")
    report = sweep(cfg, (), workers=args.workers, progress=_progress)
    setup = build(cfg, cfg.seeds[0])
    res = cfg.grid_resolution(setup.problem.dim)
    for r in report.cells[0].results:
        io.write_checkpoint(r.params, out / f"checkpoint_{r.seed}.bin")
        if r.multipliers is not None:
            io.write_multipliers(r.multipliers, out / f"multipliers_{r.seed}.bin")
        if np.all(np.isfinite(r.params)):
            field = io.field_error(r.params, setup.problem, setup.net, res)
            label = "|U - u*|" if setup.problem.exact is not None else "|U|"
            io.write_field_svg(field, setup.problem.domain, out / f"field_{r.seed}.svg",
                               f"{label}, seed {r.seed}")
    _write_report(report, out)
    return 0


def cmd_sweep(args):
    cfg = _config(args)
    out = _out(args)
    cfg.dump(out / "config.json")
    report = sweep(cfg, args.axis, workers=args.workers, progress=_progress)
    _write_report(report, out)
    return 0


def _landscape_multipliers(args, obj):
    """Trained multipliers saved by ``run`` next to the checkpoint, else the initial ones."""
    if not obj.augmented:
        return None
    path = Path(args.multipliers) if args.multipliers else None
    if path is None:
        ckpt = Path(args.checkpoint)
        sibling = ckpt.with_name(ckpt.name.replace("checkpoint_", "multipliers_", 1))
        path = sibling if sibling != ckpt and sibling.exists() else None
    if path is None:
        print("no multiplier file found; using the initial multipliers", file=sys.stderr)
        return obj.initial_multipliers()
    mult = io.read_multipliers(path)
    if len(mult.lambda_boundary) != obj.boundary_size:
        raise ConfigurationError(f"{path}: multiplier count differs from the boundary set")
    return mult


def cmd_landscape(args):
    cfg = _config(args)
    out = _out(args)
    params = io.read_checkpoint(args.checkpoint)
    setup = build(cfg, cfg.seeds[0])
    if params.size != setup.net.num_params:
        raise ConfigurationError(f"checkpoint holds {params.size} values, the network has "
                                 f"{setup.net.num_params}")
    obj = setup.objective
    multipliers = _landscape_multipliers(args, obj)
    problem = setup.problem
    error = None
    if problem.exact is not None:
        res = cfg.grid_resolution(problem.dim)

        def error(theta):
            return relative_l2(theta, problem, res, setup.net, problem.kind == "eigen")
    ls = cfg.landscape
    land = loss_landscape(params, lambda th: obj.value(th, multipliers),
                          setup.net.layout.layer_slices(), (ls.n_alpha, ls.n_beta), ls.range,
                          ls.direction_seed, error)
    io.write_landscape_csv(land, out / "landscape.csv")
    io.write_landscape_svg(land, out / "landscape.svg")
    centre = land.loss[len(land.alphas) // 2, len(land.betas) // 2]
    print(f"landscape {ls.n_alpha}x{ls.n_beta} on [-{ls.range}, {ls.range}]^2, "
          f"centre loss {centre:.6e}")
    return 0


def parser():
    p = argparse.ArgumentParser(prog="ritzpinn", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, help="JSON experiment config")
        sp.add_argument("--out", default="out", help="output directory (default: out)")
        sp.add_argument("--seeds", type=_seeds, help="override seeds, e.g. 0,1,2,3,4")
        sp.add_argument("--epochs", type=int, help="override optimizer.T")

    run = sub.add_parser("run", help="train every seed of one config")
    common(run)
    run.add_argument("--workers", type=int, default=1, help="parallel runs")
    run.set_defaults(func=cmd_run)

    sw = sub.add_parser("sweep", help="train a grid of config variants")
    common(sw)
    sw.add_argument("--axis", action="append", default=[], required=True,
                    help="name=v1,v2,... (repeatable; e.g. wB=1,10,100)")
    sw.add_argument("--workers", type=int, default=1, help="parallel runs")
    sw.set_defaults(func=cmd_sweep)

    land = sub.add_parser("landscape", help="loss landscape around a checkpoint")
    common(land)
    land.add_argument("--checkpoint", required=True, help="checkpoint_<seed>.bin from run")
    land.add_argument("--multipliers", help="multipliers_<seed>.bin (default: next to the checkpoint)")
    land.set_defaults(func=cmd_landscape)
    return p


def main(argv=None):
    args = parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, NumericalError, OSError) as exc:
        print(f"ritzpinn: error: {exc}", file=sys.stderr)
        return 2
