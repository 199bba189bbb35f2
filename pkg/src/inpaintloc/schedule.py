"""Diffusion schedule math and forward/reverse transitions.

Everything here is network-free: a precomputed schedule plus closed-form
q(x_t | x_0) sampling and the reverse posterior step that consumes a
predicted clean mask.

Conventions:
  * masks live in signal range [-1, 1] at t=0 (binary M in {0,1} encoded
    as x0 = 2M - 1);
  * alpha_bar is indexed 0..T_train with alpha_bar[0] = 1;
  * the final reverse step (previous timestep 0) is deterministic and
    returns the clamped predicted x0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import torch

LOG_SNR_CLAMP = 15.0
DEFAULT_SNR_SHIFT = -2.0 * math.log(6.0)


@dataclass(frozen=True)
class DiffusionSchedule:
    """Precomputed alpha_bar / beta / posterior-variance sequences."""

    T_train: int
    snr_shift: float
    alpha_bar: np.ndarray = field(repr=False)  # index 0..T, alpha_bar[0] = 1
    beta: np.ndarray = field(repr=False)       # index 0..T, beta[0] unused (0)
    posterior_var: np.ndarray = field(repr=False)

    def config(self) -> dict:
        """JSON-serializable record; sequences are always rebuilt."""
        return {"T_train": self.T_train, "snr_shift": self.snr_shift}

    @staticmethod
    def from_config(cfg: dict) -> "DiffusionSchedule":
        return build_schedule(int(cfg["T_train"]), float(cfg["snr_shift"]))


def shifted_log_snr(u: float, snr_shift: float) -> float:
    """Cosine log-SNR curve -2*ln(tan(pi*u/2)) plus additive shift, clamped."""
    if u <= 0.0:
        return LOG_SNR_CLAMP
    if u >= 1.0:
        return -LOG_SNR_CLAMP
    lam = -2.0 * math.log(math.tan(math.pi * u / 2.0)) + snr_shift
    return min(max(lam, -LOG_SNR_CLAMP), LOG_SNR_CLAMP)


def build_schedule(T_train: int, snr_shift: float = DEFAULT_SNR_SHIFT) -> DiffusionSchedule:
    """Build the SNR-shifted cosine schedule for T_train timesteps."""
    if T_train < 2:
        raise ValueError(f"T_train must be >= 2, got {T_train}")
    if not math.isfinite(snr_shift):
        raise ValueError(f"snr_shift must be finite, got {snr_shift}")

    lam = np.empty(T_train + 1, dtype=np.float64)
    lam[0] = math.inf  # alpha_bar[0] = 1 by convention
    for t in range(1, T_train + 1):
        lam[t] = shifted_log_snr(t / T_train, snr_shift)

    alpha_bar = np.empty(T_train + 1, dtype=np.float64)
    alpha_bar[0] = 1.0
    alpha_bar[1:] = 1.0 / (1.0 + np.exp(-lam[1:]))
    # clamping can flatten the log-SNR curve at the ends; nudge in
    # alpha_bar space to keep it strictly decreasing (relative
    # perturbation 1e-12 per tied step, invisible at 1e-6 tolerances)
    for t in range(1, T_train + 1):
        if alpha_bar[t] >= alpha_bar[t - 1]:
            alpha_bar[t] = alpha_bar[t - 1] * (1.0 - 1e-12)

    beta = np.zeros(T_train + 1, dtype=np.float64)
    beta[1:] = 1.0 - alpha_bar[1:] / alpha_bar[:-1]

    posterior_var = np.zeros(T_train + 1, dtype=np.float64)
    posterior_var[1:] = (1.0 - alpha_bar[:-1]) / (1.0 - alpha_bar[1:]) * beta[1:]

    return DiffusionSchedule(
        T_train=T_train,
        snr_shift=snr_shift,
        alpha_bar=alpha_bar,
        beta=beta,
        posterior_var=posterior_var,
    )


@dataclass
class NoisyMask:
    """A mask tensor (..., 1, H, W) tagged with its diffusion timestep."""

    values: torch.Tensor
    t: int


def encode_mask(mask01: torch.Tensor) -> NoisyMask:
    """Binary mask in {0,1} -> signal-range x0 = 2M - 1 at t=0."""
    return NoisyMask(values=2.0 * mask01 - 1.0, t=0)


def add_noise(
    x0: NoisyMask, t: int, noise: torch.Tensor, sched: DiffusionSchedule
) -> NoisyMask:
    """Closed-form q(x_t | x_0): sqrt(ab_t)*x0 + sqrt(1-ab_t)*noise."""
    if x0.t != 0:
        raise ValueError(f"add_noise expects a clean mask (t=0), got t={x0.t}")
    if not (1 <= t <= sched.T_train):
        raise ValueError(f"timestep {t} outside [1, {sched.T_train}]")
    if noise.shape != x0.values.shape:
        raise ValueError(f"noise shape {tuple(noise.shape)} != mask shape {tuple(x0.values.shape)}")
    ab = sched.alpha_bar[t]
    xt = math.sqrt(ab) * x0.values + math.sqrt(1.0 - ab) * noise
    return NoisyMask(values=xt, t=t)


def posterior_step(
    x_t: NoisyMask,
    x0_hat: torch.Tensor,
    t: int,
    z: torch.Tensor | None,
    sched: DiffusionSchedule,
    t_prev: int | None = None,
) -> NoisyMask:
    """One reverse transition x_t -> x_{t_prev} given the predicted clean mask.

    t_prev defaults to t-1 (ancestral step); a strided sampler passes the
    next subsequence member instead, with alpha_bar taken at both pair
    members. t_prev == 0 returns the clamped x0_hat exactly (deterministic
    final step).
    """
    if t < 1:
        raise ValueError(f"posterior_step requires t >= 1, got {t}")
    if t > sched.T_train:
        raise ValueError(f"timestep {t} outside [1, {sched.T_train}]")
    if x0_hat.shape != x_t.values.shape:
        raise ValueError(
            f"x0_hat shape {tuple(x0_hat.shape)} != x_t shape {tuple(x_t.values.shape)}"
        )
    if t_prev is None:
        t_prev = t - 1
    if not (0 <= t_prev < t):
        raise ValueError(f"t_prev={t_prev} must lie in [0, {t})")

    x0c = x0_hat.clamp(-1.0, 1.0)
    if t_prev == 0:
        return NoisyMask(values=x0c, t=0)

    ab_t = sched.alpha_bar[t]
    ab_s = sched.alpha_bar[t_prev]
    alpha_ts = ab_t / ab_s
    beta_ts = 1.0 - alpha_ts
    denom = 1.0 - ab_t
    coef_xt = math.sqrt(alpha_ts) * (1.0 - ab_s) / denom
    coef_x0 = math.sqrt(ab_s) * beta_ts / denom
    var = (1.0 - ab_s) / denom * beta_ts

    mean = coef_xt * x_t.values + coef_x0 * x0c
    if z is not None:
        mean = mean + math.sqrt(max(var, 0.0)) * z
    return NoisyMask(values=mean, t=t_prev)


def make_sampling_subsequence(T_train: int, T_sample: int) -> list[int]:
    """Strictly decreasing, uniformly spaced timesteps from T_train down to 1."""
    if not (1 <= T_sample <= T_train):
        raise ValueError(f"T_sample={T_sample} must lie in [1, T_train={T_train}]")
    if T_sample == 1:
        return [T_train]
    ts = np.round(np.linspace(T_train, 1, T_sample)).astype(int).tolist()
    return ts
