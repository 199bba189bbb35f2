"""Robustness curves for a trained checkpoint: degrade the test set with
each post-processing attack at several strengths and plot mean pixel AUC.

Usage: python scripts/robustness_curves.py --ckpt CKPT --data DIR [--out robustness]
"""

import argparse
import csv

from inpaintloc.data import load_folder
from inpaintloc.eval import DEFAULT_ATTACK_GRID, run_robustness
from inpaintloc.pipeline import load_checkpoint
from inpaintloc.schedule import build_schedule


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--ckpt", required=True)
    ap.add_argument("--data", required=True)
    ap.add_argument("--out", default="robustness")
    ap.add_argument("--eval-seed", type=int, default=0)
    args = ap.parse_args()

    model, cfg, _ = load_checkpoint(args.ckpt)
    sched = build_schedule(cfg.T_train, cfg.snr_shift)
    samples = load_folder(args.data)
    curves = run_robustness(
        samples, model, sched, cfg,
        grid=DEFAULT_ATTACK_GRID, eval_seed=args.eval_seed,
        plot_path=f"{args.out}.png",
    )
    with open(f"{args.out}.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["kind", "strength", "mean_auc"])
        for kind, pts in curves.items():
            for strength, auc in pts:
                w.writerow([kind, strength, auc])
            print(kind, " -> ".join(f"{a:.4f}" for _, a in pts))
    print(f"wrote {args.out}.csv and {args.out}.png")


if __name__ == "__main__":
    main()
