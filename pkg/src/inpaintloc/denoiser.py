"""U-shaped denoising network: encoder over the noisy mask alone, a mask
decoder fused with per-scale semantic conditions, an edge decoder fused
with the stride-4 edge condition, timestep injected through adaptive
group normalization in every block."""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn as nn
import torch.nn.functional as F

from .backbone import TimeEmbedding
from .conditions import ConditionSet


@dataclass
class DenoiseOutput:
    mask_logits: torch.Tensor
    edge_logits: torch.Tensor


class AdaGroupNorm(nn.Module):
    """GN(h) * (1 + scale(t)) + shift(t), scale/shift from the time embedding."""

    def __init__(self, channels, time_dim, groups=8):
        super().__init__()
        self.norm = nn.GroupNorm(min(groups, channels), channels)
        # default (nonzero) init keeps the time path live from step 0,
        # which the t-sensitivity contract relies on
        self.to_scale_shift = nn.Linear(time_dim, 2 * channels)

    def forward(self, h, temb):
        scale, shift = self.to_scale_shift(temb).chunk(2, dim=-1)
        scale = scale[:, :, None, None]
        shift = shift[:, :, None, None]
        return self.norm(h) * (1.0 + scale) + shift


class AdaResBlock(nn.Module):
    """Two 3x3 convolutions with adaptive group normalization, residual."""

    def __init__(self, channels, time_dim, groups=8):
        super().__init__()
        self.conv1 = nn.Conv2d(channels, channels, 3, padding=1)
        self.agn1 = AdaGroupNorm(channels, time_dim, groups)
        self.conv2 = nn.Conv2d(channels, channels, 3, padding=1)
        self.agn2 = AdaGroupNorm(channels, time_dim, groups)
        self.act = nn.SiLU()

    def forward(self, h, temb):
        r = self.act(self.agn1(self.conv1(h), temb))
        r = self.act(self.agn2(self.conv2(r), temb))
        return h + r


class _Decoder(nn.Module):
    """Shared decoder skeleton; conditions are fused by concat + 1x1."""

    def __init__(self, enc_channels, time_dim, cond_at, c_cond, groups=8):
        # enc_channels: channels at strides [1, 2, 4, 8, 16, 32]
        # cond_at: dict stride -> extra condition channels at that stride
        super().__init__()
        self.cond_at = cond_at
        chans = list(enc_channels)
        self.bottom_fuse = nn.Conv2d(chans[5] + cond_at.get(32, 0), chans[5], 1)
        self.bottom_block = AdaResBlock(chans[5], time_dim, groups)
        self.fuses = nn.ModuleDict()
        self.blocks = nn.ModuleDict()
        for i, stride in enumerate((16, 8, 4, 2, 1)):
            cin_up = chans[5 - i]
            cskip = chans[4 - i]
            cout = cskip
            extra = cond_at.get(stride, 0)
            self.fuses[str(stride)] = nn.Conv2d(cin_up + cskip + extra, cout, 1)
            self.blocks[str(stride)] = AdaResBlock(cout, time_dim, groups)
        self.head = nn.Conv2d(chans[0], 1, 3, padding=1)

    def forward(self, skips, temb, conds):
        # skips: features at strides [1, 2, 4, 8, 16, 32]
        h = skips[5]
        if 32 in self.cond_at:
            h = self.bottom_fuse(torch.cat([h, conds[32]], dim=1))
        else:
            h = self.bottom_fuse(h)
        h = self.bottom_block(h, temb)
        for i, stride in enumerate((16, 8, 4, 2, 1)):
            h = F.interpolate(h, scale_factor=2, mode="bilinear", align_corners=False)
            parts = [h, skips[4 - i]]
            if stride in self.cond_at:
                parts.append(conds[stride])
            h = self.fuses[str(stride)](torch.cat(parts, dim=1))
            h = self.blocks[str(stride)](h, temb)
        return self.head(h)


@dataclass(frozen=True)
class DenoiserConfig:
    enc_channels: tuple = (16, 32, 32, 64, 128, 256)  # strides 1,2,4,8,16,32
    c_cond: int = 64
    groups: int = 8
    time_dim: int = 64
    t_max: int = 1000
    include_image: bool = False  # ablation: concat image into the encoder


class Denoiser(nn.Module):
    def __init__(self, cfg: DenoiserConfig = DenoiserConfig()):
        super().__init__()
        self.cfg = cfg
        ch = cfg.enc_channels
        cin = 4 if cfg.include_image else 1
        self.time_embed = TimeEmbedding(cfg.time_dim)
        self.stem = nn.Conv2d(cin, ch[0], 3, padding=1)
        self.downs = nn.ModuleList(
            [nn.Conv2d(ch[i], ch[i + 1], 3, stride=2, padding=1) for i in range(5)]
        )
        self.enc_blocks = nn.ModuleList(
            [AdaResBlock(ch[i + 1], cfg.time_dim, cfg.groups) for i in range(5)]
        )
        mask_conds = {4: cfg.c_cond, 8: cfg.c_cond, 16: cfg.c_cond, 32: cfg.c_cond}
        edge_conds = {4: cfg.c_cond}
        self.mask_decoder = _Decoder(ch, cfg.time_dim, mask_conds, cfg.c_cond, cfg.groups)
        self.edge_decoder = _Decoder(ch, cfg.time_dim, edge_conds, cfg.c_cond, cfg.groups)

    def forward(
        self, x_t: torch.Tensor, conds: ConditionSet, t: int, image: torch.Tensor | None = None
    ) -> DenoiseOutput:
        h0, w0 = x_t.shape[-2:]
        if h0 % 32 != 0 or w0 % 32 != 0:
            raise ValueError(f"spatial dims ({h0}, {w0}) must be divisible by 32")
        tt = torch.as_tensor(t)
        if tt.min() < 0 or tt.max() > self.cfg.t_max:
            raise ValueError(f"timestep {t} outside [0, {self.cfg.t_max}]")
        for i, s in enumerate(conds.semantic):
            want = (h0 // (4 * 2 ** i), w0 // (4 * 2 ** i))
            if s.shape[-2:] != want:
                raise ValueError(
                    f"semantic condition {i} has size {tuple(s.shape[-2:])}, expected {want}"
                )
        if conds.edge_feature.shape[-2:] != (h0 // 4, w0 // 4):
            raise ValueError("edge condition must be at stride 4")

        temb = self.time_embed(t)
        if temb.shape[0] == 1 and x_t.shape[0] > 1:
            temb = temb.expand(x_t.shape[0], -1)

        enc_in = x_t
        if self.cfg.include_image:
            if image is None:
                raise ValueError("include_image=True requires the image")
            enc_in = torch.cat([x_t, image], dim=1)
        skips = [self.stem(enc_in)]
        h = skips[0]
        for down, blk in zip(self.downs, self.enc_blocks):
            h = blk(down(h), temb)
            skips.append(h)

        mask_conds = {4: conds.semantic[0], 8: conds.semantic[1],
                      16: conds.semantic[2], 32: conds.semantic[3]}
        edge_conds = {4: conds.edge_feature}
        mask_logits = self.mask_decoder(skips, temb, mask_conds)
        edge_logits = self.edge_decoder(skips, temb, edge_conds)
        if not torch.isfinite(mask_logits).all() or not torch.isfinite(edge_logits).all():
            raise FloatingPointError("non-finite denoiser output")
        return DenoiseOutput(mask_logits=mask_logits, edge_logits=edge_logits)


def logits_to_x0hat(mask_logits: torch.Tensor) -> torch.Tensor:
    """Map mask logits to the [-1, 1] signal domain: 2*sigmoid - 1."""
    return 2.0 * torch.sigmoid(mask_logits) - 1.0
