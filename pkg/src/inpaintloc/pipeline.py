"""Training loop and reverse-chain sampler."""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .data import Sample
from .denoiser import logits_to_x0hat
from .losses import LossWeights, total_loss
from .model import ModelConfig, TamperLocalizer
from .schedule import (
    DEFAULT_SNR_SHIFT,
    DiffusionSchedule,
    NoisyMask,
    build_schedule,
    make_sampling_subsequence,
    posterior_step,
)


@dataclass
class TrainConfig:
    epochs: int = 150
    batch_size: int = 32
    lr: float = 0.001
    weight_decay: float = 1e-4
    grad_clip: float = 1.0
    T_train: int = 1000
    T_sample: int = 10
    snr_shift: float = DEFAULT_SNR_SHIFT
    lambda_mask: float = 0.7
    mu_edge: float = 0.3
    seed: int = 0
    dmfe_on: bool = True
    es_on: bool = True

    @staticmethod
    def desk(**overrides) -> "TrainConfig":
        """Small-machine defaults: batch 8, few epochs; full-scale values
        stay as the dataclass defaults."""
        base = dict(epochs=50, batch_size=8)
        base.update(overrides)
        return TrainConfig(**base)

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True)

    @staticmethod
    def from_json(blob: str) -> "TrainConfig":
        return TrainConfig(**json.loads(blob))

    def loss_weights(self) -> LossWeights:
        return LossWeights(self.lambda_mask, self.mu_edge)

    def model_config(self) -> ModelConfig:
        return ModelConfig(T_train=self.T_train, dmfe_on=self.dmfe_on)


@dataclass
class TraceStep:
    t: int
    x_t: torch.Tensor
    x0_hat: torch.Tensor
    edge: torch.Tensor


@dataclass
class SampleTrace:
    steps: list = field(default_factory=list)

    def __len__(self):
        return len(self.steps)

    def timesteps(self):
        return [s.t for s in self.steps]


def samples_to_tensors(samples: list[Sample]):
    images = torch.stack(
        [torch.from_numpy(s.image).permute(2, 0, 1).contiguous() for s in samples]
    )
    masks = torch.stack([torch.from_numpy(s.gt_mask)[None] for s in samples])
    edges = torch.stack([torch.from_numpy(s.gt_edge)[None] for s in samples])
    return images, masks, edges


def build_optimizer(model: TamperLocalizer, cfg: TrainConfig) -> torch.optim.AdamW:
    """AdamW over all parameters; with edge supervision off the edge
    decoder is excluded entirely so its weights never move."""
    if cfg.es_on:
        params = model.parameters()
    else:
        edge_ids = {id(p) for p in model.denoiser.edge_decoder.parameters()}
        params = [p for p in model.parameters() if id(p) not in edge_ids]
    return torch.optim.AdamW(params, lr=cfg.lr, weight_decay=cfg.weight_decay)


def train_step(
    batch: tuple[torch.Tensor, torch.Tensor, torch.Tensor],
    model: TamperLocalizer,
    opt: torch.optim.Optimizer,
    sched: DiffusionSchedule,
    cfg: TrainConfig,
    gen: torch.Generator,
) -> float:
    """One optimizer update: per-element uniform t, closed-form noising of
    2*gt-1, full forward, composite loss, clipped AdamW step."""
    images, gt_mask, gt_edge = batch
    b = images.shape[0]
    t = torch.randint(1, cfg.T_train + 1, (b,), generator=gen)
    noise = torch.randn(gt_mask.shape, generator=gen)
    ab = torch.from_numpy(sched.alpha_bar[t.numpy()]).float().reshape(b, 1, 1, 1)
    x0 = 2.0 * gt_mask - 1.0
    x_t = ab.sqrt() * x0 + (1.0 - ab).sqrt() * noise

    model.train()
    out, _ = model(images, x_t, t)
    loss = total_loss(
        out.mask_logits,
        out.edge_logits if cfg.es_on else None,
        gt_mask,
        gt_edge if cfg.es_on else None,
        cfg.loss_weights(),
    )
    opt.zero_grad()
    loss.backward()
    grad_norm = torch.nn.utils.clip_grad_norm_(model.parameters(), cfg.grad_clip)
    if not torch.isfinite(loss):
        raise RuntimeError(
            f"non-finite loss (t={t.tolist()}, lr={opt.param_groups[0]['lr']}, "
            f"grad_norm={float(grad_norm)})"
        )
    opt.step()
    return float(loss.detach())


def fit(
    samples: list[Sample],
    cfg: TrainConfig,
    max_steps: int | None = None,
    callback=None,
) -> tuple[TamperLocalizer, list[float]]:
    """Train a fresh model on the given samples. Deterministic given cfg.seed."""
    torch.manual_seed(cfg.seed)
    model = TamperLocalizer(cfg.model_config())
    opt = build_optimizer(model, cfg)
    sched = build_schedule(cfg.T_train, cfg.snr_shift)
    images, masks, edges = samples_to_tensors(samples)
    n = images.shape[0]
    gen = torch.Generator().manual_seed(cfg.seed)

    steps_per_epoch = max(1, math.ceil(n / cfg.batch_size))
    total_steps = max_steps if max_steps is not None else cfg.epochs * steps_per_epoch
    lr_sched = torch.optim.lr_scheduler.CosineAnnealingLR(opt, T_max=total_steps)

    losses = []
    step = 0
    while step < total_steps:
        order = torch.randperm(n, generator=gen)
        for i in range(0, n, cfg.batch_size):
            if step >= total_steps:
                break
            idx = order[i : i + cfg.batch_size]
            loss = train_step(
                (images[idx], masks[idx], edges[idx]), model, opt, sched, cfg, gen
            )
            lr_sched.step()
            losses.append(loss)
            step += 1
            if callback is not None:
                callback(step, loss)
    return model, losses


@torch.no_grad()
def sample(
    image: torch.Tensor,
    model: TamperLocalizer,
    sched: DiffusionSchedule,
    cfg: TrainConfig,
    rng: torch.Generator,
) -> tuple[torch.Tensor, SampleTrace]:
    """Reverse chain over the strided subsequence; never reads any GT.

    Returns (prob map in [0,1] with shape (1,1,H,W), trace of every step).
    """
    model.eval()
    if image.ndim == 3:
        image = image[None]
    h, w = image.shape[-2:]
    seq = make_sampling_subsequence(cfg.T_train, cfg.T_sample)
    x = torch.randn((image.shape[0], 1, h, w), generator=rng)
    trace = SampleTrace()
    x0_hat = None
    for i, t in enumerate(seq):
        t_prev = seq[i + 1] if i + 1 < len(seq) else 0
        out, _ = model(image, x, t)
        x0_hat = logits_to_x0hat(out.mask_logits)
        z = torch.randn(x.shape, generator=rng) if t_prev > 0 else None
        nxt = posterior_step(NoisyMask(x, t), x0_hat, t, z, sched, t_prev=t_prev)
        if not torch.isfinite(nxt.values).all():
            raise FloatingPointError(f"non-finite state at sampling step {i} (t={t})")
        trace.steps.append(
            TraceStep(t=t, x_t=x.clone(), x0_hat=x0_hat.clone(),
                      edge=torch.sigmoid(out.edge_logits))
        )
        x = nxt.values
    prob = (x0_hat + 1.0) / 2.0
    return prob, trace


@torch.no_grad()
def sample_ensemble(
    image: torch.Tensor,
    model: TamperLocalizer,
    sched: DiffusionSchedule,
    cfg: TrainConfig,
    K: int,
    rng: torch.Generator,
) -> torch.Tensor:
    """Pixel-wise mean of K independent reverse-chain samples."""
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    probs = [sample(image, model, sched, cfg, rng)[0] for _ in range(K)]
    return torch.stack(probs).mean(dim=0)


def save_checkpoint(
    path: str | Path,
    model: TamperLocalizer,
    cfg: TrainConfig,
    opt: torch.optim.Optimizer | None = None,
    step: int = 0,
) -> None:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    torch.save(model.flat_state(), path / "weights.pt")
    if opt is not None:
        torch.save(opt.state_dict(), path / "optimizer.pt")
    (path / "config.json").write_text(cfg.to_json())
    (path / "step.txt").write_text(str(step))


def load_checkpoint(path: str | Path) -> tuple[TamperLocalizer, TrainConfig, int]:
    path = Path(path)
    cfg = TrainConfig.from_json((path / "config.json").read_text())
    model = TamperLocalizer(cfg.model_config())
    state = torch.load(path / "weights.pt", weights_only=True)
    model.load_state_dict(state)
    step = int((path / "step.txt").read_text()) if (path / "step.txt").exists() else 0
    return model, cfg, step
