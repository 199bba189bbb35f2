"""Conditional-diffusion localization of inpainted image regions.

An image plus a noisy mask are iteratively denoised into a per-pixel
tamper-probability map, guided by per-scale semantic conditions and an
edge condition with auxiliary edge supervision.
"""

from .schedule import (
    DiffusionSchedule,
    NoisyMask,
    add_noise,
    build_schedule,
    encode_mask,
    make_sampling_subsequence,
    posterior_step,
)
from .losses import LossWeights, dice_loss, total_loss, wbce_wiou
from .metrics import EvalReport, pixel_auc
from .model import ModelConfig, TamperLocalizer
from .pipeline import (
    SampleTrace,
    TrainConfig,
    fit,
    load_checkpoint,
    sample,
    sample_ensemble,
    save_checkpoint,
    train_step,
)
from .data import AttackSpec, Sample, apply_attack, derive_edge, generate_synthetic, load_folder

__all__ = [
    "DiffusionSchedule",
    "NoisyMask",
    "add_noise",
    "build_schedule",
    "encode_mask",
    "make_sampling_subsequence",
    "posterior_step",
    "LossWeights",
    "dice_loss",
    "total_loss",
    "wbce_wiou",
    "EvalReport",
    "pixel_auc",
    "ModelConfig",
    "TamperLocalizer",
    "SampleTrace",
    "TrainConfig",
    "fit",
    "load_checkpoint",
    "sample",
    "sample_ensemble",
    "save_checkpoint",
    "train_step",
    "AttackSpec",
    "Sample",
    "apply_attack",
    "derive_edge",
    "generate_synthetic",
    "load_folder",
]
