"""Loss surface around a trained network.

Trains one network, then evaluates the loss on the plane spanned by two
random directions through the checkpoint. Each direction is rescaled layer
by layer to the norm of the trained weights, so the picture does not depend
on how the parameters happen to be scaled. The error grid next to it shows
how well a low loss tracks a low error.

    python demos/03_loss_landscape.py --epochs 2000 --grid 21
"""

import argparse
from pathlib import Path

from ritzpinn.harness import ExperimentConfig, build, loss_landscape, relative_l2, train
from ritzpinn.harness.config import LossSettings, OptimizerSettings
from ritzpinn.harness.io import write_landscape_csv, write_landscape_svg


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--epochs", type=int, default=2000)
    ap.add_argument("--grid", type=int, default=21)
    ap.add_argument("--formulation", choices=("pinn", "ritz"), default="ritz")
    ap.add_argument("--out", default="out/demo3")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    boundary = "augmented" if args.formulation == "ritz" else "soft"
    cfg = ExperimentConfig(problem="ex1:k=2", loss=LossSettings(args.formulation, boundary),
                           optimizer=OptimizerSettings(T=args.epochs), test_grid=51)
    setup = build(cfg, 0)
    res = train(cfg, 0, setup)
    print(f"trained: rel L2 {res.rel_l2:.3e} at epoch {res.best_epoch}")

    obj = setup.objective
    land = loss_landscape(res.params, lambda th: obj.value(th, res.multipliers),
                          setup.net.layout.layer_slices(), (args.grid, args.grid), 1.0, 0,
                          lambda th: relative_l2(th, setup.problem, 51, setup.net))
    c = args.grid // 2
    print(f"centre loss {land.loss[c, c]:.4e}, corner losses "
          f"{land.loss[0, 0]:.3e} / {land.loss[-1, -1]:.3e}")
    write_landscape_csv(land, out / "landscape.csv")
    write_landscape_svg(land, out / "landscape.svg")
    print(f"wrote {out}/landscape.csv and landscape.svg")


if __name__ == "__main__":
    main()
