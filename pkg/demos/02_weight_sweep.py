"""How the boundary weight steers a penalty-based residual loss.

Sweeps w_B over five decades for the residual loss on the multi-frequency
example and prints the table with the best cell of the row starred. Cells
where every seed diverged print as "-".

    python demos/02_weight_sweep.py --epochs 2000 --seeds 0,1
"""

import argparse

from ritzpinn.harness import ExperimentConfig, sweep
from ritzpinn.harness.config import LossSettings, OptimizerSettings


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--epochs", type=int, default=2000)
    ap.add_argument("--seeds", default="0,1")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    cfg = ExperimentConfig(problem="ex2:N=6", loss=LossSettings("pinn", "soft"),
                           optimizer=OptimizerSettings(T=args.epochs),
                           seeds=[int(s) for s in args.seeds.split(",")])

    def progress(job, result):
        variant, seed = job
        print(f"  w_B={variant.loss.w_B:g} seed {seed}: {result.rel_l2:.3e}", flush=True)

    report = sweep(cfg, ["wB=1,10,100,1000,10000"], workers=args.workers, progress=progress)
    print()
    print(report.to_text(), end="")


if __name__ == "__main__":
    main()
