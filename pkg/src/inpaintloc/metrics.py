"""Pixel-level ROC AUC and evaluation report containers."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata


def pixel_auc(prob_map: np.ndarray, gt_mask: np.ndarray) -> float | None:
    """ROC AUC over all pixels via the Mann-Whitney rank statistic.

    Ties are handled by midranks. Returns None when the ground truth is
    constant (single class, AUC undefined).
    """
    if prob_map.shape != gt_mask.shape:
        raise ValueError(f"shape mismatch: {prob_map.shape} vs {gt_mask.shape}")
    scores = np.asarray(prob_map, dtype=np.float64).ravel()
    labels = np.asarray(gt_mask).ravel().astype(bool)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = rankdata(scores)
    u = ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def config_fingerprint(cfg: dict) -> str:
    """Short stable hash of a config record, embedded in every report."""
    blob = json.dumps(cfg, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class EvalReport:
    """Per-image AUC list plus the mean over defined entries.

    AUC here is a per-image mean (not pooled pixels); images with constant
    GT are excluded from the mean and counted in n_excluded.
    """

    per_image_auc: list  # float or None per image
    fingerprint: str
    attack_table: dict | None = None
    notes: str = "AUC aggregated as per-image mean; constant-GT images excluded"

    @property
    def defined(self) -> list[float]:
        return [a for a in self.per_image_auc if a is not None]

    @property
    def n_excluded(self) -> int:
        return sum(1 for a in self.per_image_auc if a is None)

    @property
    def mean_auc(self) -> float:
        vals = self.defined
        return float(np.mean(vals)) if vals else float("nan")

    def to_dict(self) -> dict:
        return {
            "per_image_auc": self.per_image_auc,
            "mean_auc": self.mean_auc,
            "n_excluded": self.n_excluded,
            "fingerprint": self.fingerprint,
            "attack_table": self.attack_table,
            "notes": self.notes,
        }
