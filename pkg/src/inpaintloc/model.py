"""Full model assembly: pyramid backbone -> condition network -> denoiser."""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn as nn

from .backbone import BackboneConfig, PyramidBackbone
from .conditions import ConditionNetwork, ConditionSet
from .denoiser import Denoiser, DenoiserConfig, DenoiseOutput


@dataclass(frozen=True)
class ModelConfig:
    channels: tuple = (32, 64, 128, 256)
    c_cond: int = 64
    groups: int = 8
    time_dim: int = 64
    T_train: int = 1000
    dmfe_on: bool = True
    use_time_token: bool = True
    include_image: bool = False


class TamperLocalizer(nn.Module):
    """image + x_t + t -> (mask logits, edge logits)."""

    def __init__(self, cfg: ModelConfig = ModelConfig()):
        super().__init__()
        self.cfg = cfg
        self.backbone = PyramidBackbone(
            BackboneConfig(
                channels=cfg.channels,
                time_dim=cfg.time_dim,
                use_time_token=cfg.use_time_token,
            )
        )
        self.conditions = ConditionNetwork(
            in_channels=cfg.channels, c_cond=cfg.c_cond, dmfe_on=cfg.dmfe_on
        )
        self.denoiser = Denoiser(
            DenoiserConfig(
                c_cond=cfg.c_cond,
                groups=cfg.groups,
                time_dim=cfg.time_dim,
                t_max=cfg.T_train,
                include_image=cfg.include_image,
            )
        )

    def forward(
        self, image: torch.Tensor, x_t: torch.Tensor, t: int
    ) -> tuple[DenoiseOutput, ConditionSet]:
        fp = self.backbone(image, x_t, t)
        conds = self.conditions(fp)
        out = self.denoiser(x_t, conds, t, image=image)
        return out, conds

    def count_parameters(self) -> int:
        return sum(p.numel() for p in self.parameters())

    def flat_state(self) -> dict:
        """Checkpoint surface: flat name -> tensor map."""
        return {k: v.detach().clone() for k, v in self.state_dict().items()}
