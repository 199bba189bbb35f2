"""Composite training objective: weighted BCE + weighted IoU on the mask,
Dice on the edge, mixed with a lambda:mu ratio (default 7:3)."""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn.functional as F

PROB_EPS = 1e-6
DICE_EPS = 1e-6


@dataclass(frozen=True)
class LossWeights:
    lambda_mask: float = 0.7
    mu_edge: float = 0.3

    def __post_init__(self):
        if self.lambda_mask < 0 or self.mu_edge < 0:
            raise ValueError("loss weights must be non-negative")


def boundary_weights(gt: torch.Tensor, pool: int = 15, gain: float = 5.0) -> torch.Tensor:
    """Per-pixel weights 1 + gain*|meanpool(gt) - gt|, emphasizing boundaries."""
    pad = pool // 2
    # count_include_pad=False: constant regions touching the image border
    # still get weight exactly 1
    pooled = F.avg_pool2d(gt, kernel_size=pool, stride=1, padding=pad, count_include_pad=False)
    return 1.0 + gain * (pooled - gt).abs()


def wbce_wiou(pred_prob: torch.Tensor, gt: torch.Tensor) -> torch.Tensor:
    """Weighted BCE + weighted IoU loss on probabilities vs a binary mask."""
    if pred_prob.shape != gt.shape:
        raise ValueError(f"shape mismatch: pred {tuple(pred_prob.shape)} vs gt {tuple(gt.shape)}")
    if not torch.all((gt == 0) | (gt == 1)):
        raise ValueError("gt must be binary {0,1}")

    w = boundary_weights(gt)
    p = pred_prob.clamp(PROB_EPS, 1.0 - PROB_EPS)
    bce = -(gt * p.log() + (1.0 - gt) * (1.0 - p).log())
    wbce = (w * bce).sum() / w.sum()

    inter = (w * p * gt).sum()
    union = (w * (p + gt - p * gt)).sum()
    wiou = 1.0 - inter / union.clamp_min(PROB_EPS)
    return wbce + wiou


def dice_loss(pred_prob: torch.Tensor, gt: torch.Tensor) -> torch.Tensor:
    """1 - 2*sum(p*g) / (sum(p^2) + sum(g^2) + eps)."""
    if pred_prob.shape != gt.shape:
        raise ValueError(f"shape mismatch: pred {tuple(pred_prob.shape)} vs gt {tuple(gt.shape)}")
    inter = (pred_prob * gt).sum()
    denom = (pred_prob ** 2).sum() + (gt ** 2).sum() + DICE_EPS
    return 1.0 - 2.0 * inter / denom


def total_loss(
    mask_logits: torch.Tensor,
    edge_logits: torch.Tensor | None,
    gt_mask: torch.Tensor,
    gt_edge: torch.Tensor | None,
    w: LossWeights = LossWeights(),
) -> torch.Tensor:
    """lambda * (WBCE + WIoU)(sigmoid(mask_logits)) + mu * Dice(sigmoid(edge_logits)).

    edge_logits may be None when edge supervision is disabled; the mu term
    is then dropped entirely.
    """
    loss = w.lambda_mask * wbce_wiou(torch.sigmoid(mask_logits), gt_mask)
    if edge_logits is not None and w.mu_edge > 0:
        loss = loss + w.mu_edge * dice_loss(torch.sigmoid(edge_logits), gt_edge)
    return loss
