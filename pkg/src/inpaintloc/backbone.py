"""Hierarchical feature extraction from [image; noisy mask] with the
timestep injected as an extra token in each stage's attention encoder.

A small 4-stage pyramid transformer trained from scratch: overlapping
convolutional patch embedding (stride 4, then 2), two blocks per stage
with spatial-reduction attention, channel plan 32/64/128/256.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import torch
import torch.nn as nn


def sinusoidal_embedding(t: int | torch.Tensor, dim: int) -> torch.Tensor:
    """Interleaved [sin, cos, sin, cos, ...] timestep encoding.

    t=0 yields the [0, 1, 0, 1, ...] pattern.
    """
    if dim % 2 != 0:
        raise ValueError(f"embedding dim must be even, got {dim}")
    if not torch.is_tensor(t):
        t = torch.tensor([t], dtype=torch.float32)
    t = t.float().reshape(-1, 1)
    half = dim // 2
    freqs = torch.exp(-math.log(10000.0) * torch.arange(half, dtype=torch.float32) / half)
    angles = t * freqs[None, :]
    emb = torch.stack([angles.sin(), angles.cos()], dim=-1).reshape(t.shape[0], dim)
    return emb


class TimeEmbedding(nn.Module):
    """Sinusoidal encoding followed by a learned two-layer projection."""

    def __init__(self, dim: int, out_dim: int | None = None):
        super().__init__()
        if dim % 2 != 0:
            raise ValueError(f"embedding dim must be even, got {dim}")
        out_dim = out_dim or dim
        self.dim = dim
        self.proj = nn.Sequential(nn.Linear(dim, out_dim), nn.SiLU(), nn.Linear(out_dim, out_dim))

    def forward(self, t: int | torch.Tensor) -> torch.Tensor:
        emb = sinusoidal_embedding(t, self.dim)
        return self.proj(emb.to(self.proj[0].weight.dtype))


class SpatialReductionAttention(nn.Module):
    """Multi-head self-attention whose keys/values come from a strided
    reduction of the spatial tokens; leading non-spatial tokens (the time
    token) pass into the key/value set unreduced."""

    def __init__(self, dim, heads, sr_ratio):
        super().__init__()
        self.heads = heads
        self.sr_ratio = sr_ratio
        self.attn = nn.MultiheadAttention(dim, heads, batch_first=True)
        if sr_ratio > 1:
            self.sr = nn.Conv2d(dim, dim, kernel_size=sr_ratio, stride=sr_ratio)
            self.sr_norm = nn.LayerNorm(dim)

    def forward(self, x, h, w, n_lead):
        lead, spatial = x[:, :n_lead], x[:, n_lead:]
        if self.sr_ratio > 1:
            b, n, c = spatial.shape
            fm = spatial.transpose(1, 2).reshape(b, c, h, w)
            fm = self.sr(fm)
            red = fm.reshape(b, c, -1).transpose(1, 2)
            kv = torch.cat([lead, self.sr_norm(red)], dim=1)
        else:
            kv = x
        out, _ = self.attn(x, kv, kv, need_weights=False)
        return out


class EncoderBlock(nn.Module):
    def __init__(self, dim, heads, sr_ratio, mlp_ratio=2):
        super().__init__()
        self.norm1 = nn.LayerNorm(dim)
        self.attn = SpatialReductionAttention(dim, heads, sr_ratio)
        self.norm2 = nn.LayerNorm(dim)
        self.mlp = nn.Sequential(
            nn.Linear(dim, mlp_ratio * dim), nn.GELU(), nn.Linear(mlp_ratio * dim, dim)
        )

    def forward(self, x, h, w, n_lead):
        x = x + self.attn(self.norm1(x), h, w, n_lead)
        x = x + self.mlp(self.norm2(x))
        return x


class PatchEmbed(nn.Module):
    """Overlapping convolutional patchify + token LayerNorm."""

    def __init__(self, cin, cout, stride):
        super().__init__()
        kernel = stride + 3
        self.conv = nn.Conv2d(cin, cout, kernel, stride=stride, padding=(kernel - 1) // 2)
        self.norm = nn.LayerNorm(cout)

    def forward(self, x):
        x = self.conv(x)
        b, c, h, w = x.shape
        tokens = x.reshape(b, c, h * w).transpose(1, 2)
        return self.norm(tokens), h, w


@dataclass(frozen=True)
class BackboneConfig:
    channels: tuple = (32, 64, 128, 256)
    blocks_per_stage: tuple = (2, 2, 2, 2)
    heads: tuple = (1, 2, 4, 8)
    sr_ratios: tuple = (8, 4, 2, 1)
    time_dim: int = 64
    use_time_token: bool = True


@dataclass
class FeaturePyramid:
    """Four stage features at strides 4/8/16/32."""

    f1: torch.Tensor
    f2: torch.Tensor
    f3: torch.Tensor
    f4: torch.Tensor

    def as_list(self):
        return [self.f1, self.f2, self.f3, self.f4]


class PyramidBackbone(nn.Module):
    """4-stage feature extractor over concat([image, x_t]), time-as-token."""

    def __init__(self, cfg: BackboneConfig = BackboneConfig()):
        super().__init__()
        self.cfg = cfg
        self.time_embed = TimeEmbedding(cfg.time_dim)
        chans = (4,) + tuple(cfg.channels)
        strides = (4, 2, 2, 2)
        self.patch_embeds = nn.ModuleList(
            [PatchEmbed(chans[i], chans[i + 1], strides[i]) for i in range(4)]
        )
        self.time_projs = nn.ModuleList(
            [nn.Linear(cfg.time_dim, c) for c in cfg.channels]
        )
        self.stages = nn.ModuleList(
            [
                nn.ModuleList(
                    [
                        EncoderBlock(cfg.channels[i], cfg.heads[i], cfg.sr_ratios[i])
                        for _ in range(cfg.blocks_per_stage[i])
                    ]
                )
                for i in range(4)
            ]
        )
        self.out_norms = nn.ModuleList([nn.LayerNorm(c) for c in cfg.channels])

    def forward(self, image: torch.Tensor, x_t: torch.Tensor, t: int) -> FeaturePyramid:
        if image.shape[-2:] != x_t.shape[-2:]:
            raise ValueError(
                f"image {tuple(image.shape[-2:])} and x_t {tuple(x_t.shape[-2:])} spatial mismatch"
            )
        h0, w0 = image.shape[-2:]
        if h0 % 32 != 0 or w0 % 32 != 0:
            raise ValueError(f"spatial dims ({h0}, {w0}) must be divisible by 32")
        if torch.isnan(image).any() or torch.isnan(x_t).any():
            raise ValueError("NaN in backbone inputs")

        x = torch.cat([image, x_t], dim=1)
        b = x.shape[0]
        temb = self.time_embed(t)
        if temb.shape[0] == 1 and b > 1:
            temb = temb.expand(b, -1)

        feats = []
        for i in range(4):
            tokens, h, w = self.patch_embeds[i](x)
            if self.cfg.use_time_token:
                ttok = self.time_projs[i](temb).unsqueeze(1)
                seq = torch.cat([ttok, tokens], dim=1)
                n_lead = 1
            else:
                seq, n_lead = tokens, 0
            for blk in self.stages[i]:
                seq = blk(seq, h, w, n_lead)
            tokens = self.out_norms[i](seq[:, n_lead:])
            x = tokens.transpose(1, 2).reshape(b, self.cfg.channels[i], h, w)
            feats.append(x)
        fp = FeaturePyramid(*feats)
        for f in fp.as_list():
            if not torch.isfinite(f).all():
                raise FloatingPointError("non-finite backbone feature")
        return fp
