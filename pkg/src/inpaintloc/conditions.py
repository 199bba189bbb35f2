"""Condition assembly: per-scale semantic maps refined top-down through
multi-scale extractor blocks, plus one edge condition map fusing the
detail-rich stride-4 feature with the semantically-rich stride-32 one."""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn as nn
import torch.nn.functional as F

from .backbone import FeaturePyramid
from .dmfe import DmfeBlock, PlainBlock


@dataclass
class ConditionSet:
    """semantic[i] matches pyramid stage i spatially; edge_feature is at
    stride 4. All share C_cond channels."""

    semantic: list  # 4 tensors, strides 4/8/16/32
    edge_feature: torch.Tensor


def _up2(x: torch.Tensor) -> torch.Tensor:
    return F.interpolate(x, scale_factor=2, mode="bilinear", align_corners=False)


class ConditionNetwork(nn.Module):
    """Builds the ConditionSet from a FeaturePyramid.

    Semantic path: s4 = B(f4); s_i = B(f_i) + up2(s_{i+1}) for i=3,2,1
    (top-down refinement). Edge path: concat(proj f1, upsampled proj f4)
    through one block. `dmfe_on=False` swaps every block for a plain-conv
    stand-in with identical shapes (ablation).
    """

    def __init__(self, in_channels=(32, 64, 128, 256), c_cond=64, mid=32, dmfe_on=True):
        super().__init__()
        self.c_cond = c_cond
        if dmfe_on:
            # deep pyramid levels can be smaller than the standalone DMFE
            # contract's 8px floor (2x2 at 64px input); relax it here
            def block(cin, cmid, cout):
                return DmfeBlock(cin, cmid, cout, min_size=1)

        else:
            block = PlainBlock
        self.projs = nn.ModuleList([nn.Conv2d(c, c_cond, 1) for c in in_channels])
        self.sem_blocks = nn.ModuleList(
            [block(c_cond, mid, c_cond) for _ in range(4)]
        )
        self.edge_proj1 = nn.Conv2d(in_channels[0], c_cond, 1)
        self.edge_proj4 = nn.Conv2d(in_channels[3], c_cond, 1)
        self.edge_block = block(2 * c_cond, mid, c_cond)

    def build_semantic_conditions(self, fp: FeaturePyramid) -> list:
        feats = [self.projs[i](f) for i, f in enumerate(fp.as_list())]
        s = [None] * 4
        s[3] = self.sem_blocks[3](feats[3])
        for i in (2, 1, 0):
            up = _up2(s[i + 1])
            if up.shape[-2:] != feats[i].shape[-2:]:
                raise ValueError(
                    f"upsampled s{i + 2} {tuple(up.shape[-2:])} does not match "
                    f"f{i + 1} {tuple(feats[i].shape[-2:])}"
                )
            s[i] = self.sem_blocks[i](feats[i]) + up
        return s

    def build_edge_condition(self, fp: FeaturePyramid) -> torch.Tensor:
        f1 = self.edge_proj1(fp.f1)
        f4 = F.interpolate(
            self.edge_proj4(fp.f4), size=f1.shape[-2:], mode="bilinear", align_corners=False
        )
        return self.edge_block(torch.cat([f1, f4], dim=1))

    def forward(self, fp: FeaturePyramid) -> ConditionSet:
        return ConditionSet(
            semantic=self.build_semantic_conditions(fp),
            edge_feature=self.build_edge_condition(fp),
        )
