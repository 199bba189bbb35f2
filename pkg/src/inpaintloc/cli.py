"""Command-line surface: train / infer / eval / ablate / attack / gen-data."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import click
import numpy as np
import torch
from PIL import Image

from . import data as data_mod
from . import eval as eval_mod
from .pipeline import (
    TrainConfig,
    fit,
    load_checkpoint,
    sample,
    sample_ensemble,
    save_checkpoint,
)
from .schedule import build_schedule


def _load_dataset(path: str):
    return data_mod.load_folder(path)


@click.group()
def main():
    """Diffusion-based localization of inpainted image regions."""


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="JSON file mirroring TrainConfig; desk defaults otherwise.")
@click.option("--data", "data_path", type=click.Path(exists=True), required=True,
              help="Folder dataset with images/ and masks/.")
@click.option("--out", "out_dir", type=click.Path(), default="checkpoint")
@click.option("--max-steps", type=int, default=None)
def train(config_path, data_path, out_dir, max_steps):
    """Train a model on a folder dataset and write a checkpoint."""
    cfg = (
        TrainConfig.from_json(Path(config_path).read_text())
        if config_path
        else TrainConfig.desk()
    )
    samples = _load_dataset(data_path)
    click.echo(f"training on {len(samples)} samples ({cfg.to_json()})")
    model, losses = fit(
        samples, cfg, max_steps=max_steps,
        callback=lambda s, l: click.echo(f"step {s}: loss {l:.4f}") if s % 25 == 0 else None,
    )
    opt = None
    save_checkpoint(out_dir, model, cfg, opt, step=len(losses))
    click.echo(f"saved checkpoint to {out_dir}")


@main.command()
@click.option("--ckpt", type=click.Path(exists=True), required=True)
@click.option("--image", "image_path", type=click.Path(exists=True), required=True)
@click.option("--ensemble", "k", type=int, default=1)
@click.option("--trace", "trace_out", type=click.Path(), default=None,
              help="Also render the per-step sampling trace to this PNG.")
@click.option("--out", "out_path", type=click.Path(), default="prob_map.png")
@click.option("--seed", type=int, default=0)
def infer(ckpt, image_path, k, trace_out, out_path, seed):
    """Run the sampler on one image and save the probability map."""
    model, cfg, _ = load_checkpoint(ckpt)
    sched = build_schedule(cfg.T_train, cfg.snr_shift)
    img = np.asarray(Image.open(image_path).convert("RGB"), dtype=np.float32) / 255.0
    image = torch.from_numpy(img).permute(2, 0, 1)
    rng = torch.Generator().manual_seed(seed)
    if k == 1:
        prob, trace = sample(image, model, sched, cfg, rng)
        if trace_out:
            eval_mod.render_trace(trace, trace_out)
            click.echo(f"trace written to {trace_out}")
    else:
        prob = sample_ensemble(image, model, sched, cfg, k, rng)
    arr = (prob[0, 0].numpy() * 255).round().astype(np.uint8)
    Image.fromarray(arr).save(out_path)
    click.echo(f"probability map written to {out_path}")


@main.command("eval")
@click.option("--ckpt", type=click.Path(exists=True), required=True)
@click.option("--data", "data_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), default=None)
@click.option("--seed", type=int, default=0)
def eval_cmd(ckpt, data_path, out_path, seed):
    """Mean per-image pixel AUC of a checkpoint on a folder dataset."""
    model, cfg, _ = load_checkpoint(ckpt)
    sched = build_schedule(cfg.T_train, cfg.snr_shift)
    samples = _load_dataset(data_path)
    report = eval_mod.evaluate(samples, model, sched, cfg, seed=seed)
    click.echo(f"# {report.notes}")
    click.echo(f"fingerprint: {report.fingerprint}")
    click.echo(f"mean AUC: {report.mean_auc:.4f} ({report.n_excluded} excluded)")
    if out_path:
        Path(out_path).write_text(json.dumps(report.to_dict(), indent=2))


@main.command()
@click.option("--data", "data_path", type=click.Path(exists=True), required=True)
@click.option("--test-frac", type=float, default=0.25)
@click.option("--max-steps", type=int, default=None)
@click.option("--out", "out_path", type=click.Path(), default="ablation.csv")
def ablate(data_path, test_frac, max_steps, out_path):
    """Train and score the 2x2 grid of extractor/edge-supervision toggles."""
    samples = _load_dataset(data_path)
    n_test = max(1, int(len(samples) * test_frac))
    rows = eval_mod.run_ablation(
        samples[n_test:], samples[:n_test], TrainConfig.desk(), max_steps=max_steps
    )
    with open(out_path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    for row in rows:
        click.echo(f"dmfe={row['dmfe_on']} es={row['es_on']} mean_auc={row['mean_auc']:.4f}")
    click.echo(f"grid written to {out_path}")


@main.command()
@click.option("--ckpt", type=click.Path(exists=True), required=True)
@click.option("--data", "data_path", type=click.Path(exists=True), required=True)
@click.option("--grid", "grid_path", type=click.Path(exists=True), default=None,
              help="JSON {kind: [strengths]}; built-in grid otherwise.")
@click.option("--out", "out_prefix", type=click.Path(), default="robustness")
def attack(ckpt, data_path, grid_path, out_prefix):
    """Robustness curves: attack the test set, score each strength."""
    model, cfg, _ = load_checkpoint(ckpt)
    sched = build_schedule(cfg.T_train, cfg.snr_shift)
    samples = _load_dataset(data_path)
    grid = json.loads(Path(grid_path).read_text()) if grid_path else None
    curves = eval_mod.run_robustness(
        samples, model, sched, cfg, grid=grid, plot_path=f"{out_prefix}.png"
    )
    with open(f"{out_prefix}.csv", "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["kind", "strength", "mean_auc"])
        for kind, pts in curves.items():
            for strength, auc in pts:
                writer.writerow([kind, strength, auc])
    click.echo(f"curves written to {out_prefix}.csv and {out_prefix}.png")


@main.command("gen-data")
@click.option("--n", type=int, required=True)
@click.option("--size", type=int, default=64)
@click.option("--seed", type=int, default=0)
@click.option("--out", "out_dir", type=click.Path(), required=True)
def gen_data(n, size, seed, out_dir):
    """Generate a synthetic tamper-localization dataset folder."""
    samples = data_mod.generate_synthetic(n, size, seed)
    data_mod.save_folder(samples, out_dir)
    click.echo(f"wrote {len(samples)} samples to {out_dir}")


if __name__ == "__main__":
    main()
