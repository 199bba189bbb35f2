"""Dual-stream multi-scale feature extractor.

Two four-branch cascades of dilated convolutions, one with ascending
dilation {3,5,7} and one descending {7,5,3}, each branch fed by a shared
1x1 channel reduction, summed per stream, concatenated and fused by a
3x3 convolution, plus a 1x1-projected shortcut.
"""

from __future__ import annotations

import torch
import torch.nn as nn

DILATIONS = (3, 5, 7)


class ConvNormAct(nn.Module):
    """Conv2d followed by optional GroupNorm and SiLU."""

    def __init__(self, cin, cout, kernel, dilation=1, norm=True, act=True, groups=8):
        super().__init__()
        if isinstance(kernel, int):
            kernel = (kernel, kernel)
        pad = (dilation * (kernel[0] - 1) // 2, dilation * (kernel[1] - 1) // 2)
        self.conv = nn.Conv2d(cin, cout, kernel, padding=pad, dilation=dilation)
        self.norm = nn.GroupNorm(min(groups, cout), cout) if norm else nn.Identity()
        self.act = nn.SiLU() if act else nn.Identity()

    def forward(self, x):
        return self.act(self.norm(self.conv(x)))


class AsymPair(nn.Module):
    """1x3 then 3x1 convolution (printed branch order), shape preserving."""

    def __init__(self, channels, norm=True):
        super().__init__()
        self.conv_1x3 = ConvNormAct(channels, channels, (1, 3), norm=norm)
        self.conv_3x1 = ConvNormAct(channels, channels, (3, 1), norm=norm)

    def forward(self, x):
        return self.conv_3x1(self.conv_1x3(x))


class CovS(nn.Module):
    """Stacked branch convolution: asymmetric 1x3/3x1 pair then a dilated
    3x3, all shape preserving."""

    def __init__(self, channels, dilation, norm=True):
        super().__init__()
        if dilation not in DILATIONS:
            raise ValueError(f"unsupported dilation {dilation}, expected one of {DILATIONS}")
        self.asym = AsymPair(channels, norm=norm)
        self.dilated = ConvNormAct(channels, channels, 3, dilation=dilation, norm=norm)

    def forward(self, x):
        return self.dilated(self.asym(x))


class DmfeBlock(nn.Module):
    """The dual-stream extractor; preserves spatial size.

    `shortcut` toggles the outer 1x1-projected residual (the literal
    formula without it is also runnable). `norm` disables normalization
    everywhere, used by impulse-response oracles.
    """

    def __init__(
        self, in_channels, mid_channels=32, out_channels=64, shortcut=True, norm=True, min_size=8
    ):
        super().__init__()
        if mid_channels > in_channels:
            raise ValueError("mid_channels must not exceed in_channels")
        self.in_channels = in_channels
        self.min_size = min_size
        self.mid_channels = mid_channels
        self.out_channels = out_channels

        self.reduce = ConvNormAct(in_channels, mid_channels, 1, norm=norm)
        # stream 1: ascending dilation
        self.d1 = AsymPair(mid_channels, norm=norm)
        self.d2 = CovS(mid_channels, 3, norm=norm)
        self.d3 = CovS(mid_channels, 5, norm=norm)
        self.d4 = CovS(mid_channels, 7, norm=norm)
        # stream 2: descending dilation
        self.u1 = CovS(mid_channels, 7, norm=norm)
        self.u2 = CovS(mid_channels, 5, norm=norm)
        self.u3 = CovS(mid_channels, 3, norm=norm)
        self.u4 = AsymPair(mid_channels, norm=norm)

        self.fuse = ConvNormAct(2 * mid_channels, out_channels, 3, norm=norm)
        self.shortcut = (
            nn.Conv2d(in_channels, out_channels, 1) if shortcut else None
        )

    def forward(self, f: torch.Tensor) -> torch.Tensor:
        if f.shape[1] != self.in_channels:
            raise ValueError(f"expected {self.in_channels} channels, got {f.shape[1]}")
        if f.shape[-2] < self.min_size or f.shape[-1] < self.min_size:
            raise ValueError(
                f"spatial dims {tuple(f.shape[-2:])} too small (< {self.min_size})"
            )

        r = self.reduce(f)
        d1 = self.d1(r)
        d2 = self.d2(r + d1)
        d3 = self.d3(r + d2)
        d4 = self.d4(r + d3)
        u1 = self.u1(r)
        u2 = self.u2(r + u1)
        u3 = self.u3(r + u2)
        u4 = self.u4(r + u3)

        out = self.fuse(torch.cat([d1 + d2 + d3 + d4, u1 + u2 + u3 + u4], dim=1))
        if self.shortcut is not None:
            out = out + self.shortcut(f)
        return out


class PlainBlock(nn.Module):
    """DMFE-ablation stand-in: two plain 3x3 convolutions with the same
    channel interface and shape contract."""

    def __init__(self, in_channels, mid_channels=32, out_channels=64):
        super().__init__()
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.body = nn.Sequential(
            ConvNormAct(in_channels, mid_channels, 3),
            ConvNormAct(mid_channels, out_channels, 3),
        )
        self.shortcut = nn.Conv2d(in_channels, out_channels, 1)

    def forward(self, f):
        return self.body(f) + self.shortcut(f)
