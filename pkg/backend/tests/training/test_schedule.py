import pytest

from backend.src.exceptions import ContractError
from backend.src.schemas import TrainConfig
from backend.src.training import lr_schedule


@pytest.fixture
def schedule_config() -> TrainConfig:
    return TrainConfig(lr0=0.05, decay_every_steps=500, decay_factor=0.1)


@pytest.mark.parametrize("step, expected", [(0, 0.05), (499, 0.05), (500, 0.005), (999, 0.005), (1000, 0.0005)])
def test_staircase_decay(schedule_config, step, expected):
    assert lr_schedule(step, schedule_config) == pytest.approx(expected, rel=1e-12)


def test_unit_factor_keeps_the_rate_constant():
    config = TrainConfig(lr0=0.02, decay_every_steps=10, decay_factor=1.0)
    assert {lr_schedule(step, config) for step in range(0, 100, 7)} == {0.02}


def test_negative_step(schedule_config):
    with pytest.raises(ContractError, match="step must be >= 0"):
        lr_schedule(-1, schedule_config)
