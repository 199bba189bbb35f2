import pytest
import torch

from inpaintloc.data import generate_synthetic
from inpaintloc.model import TamperLocalizer
from inpaintloc.pipeline import TrainConfig
from inpaintloc.schedule import build_schedule


@pytest.fixture(scope="session")
def desk_cfg():
    return TrainConfig.desk(seed=1)


@pytest.fixture(scope="session")
def tiny_samples():
    return generate_synthetic(8, 64, seed=3)


@pytest.fixture(scope="session")
def desk_sched(desk_cfg):
    return build_schedule(desk_cfg.T_train, desk_cfg.snr_shift)


@pytest.fixture(scope="session")
def untrained_model(desk_cfg):
    torch.manual_seed(desk_cfg.seed)
    return TamperLocalizer(desk_cfg.model_config()).eval()
