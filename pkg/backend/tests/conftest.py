"""
Global pytest configuration. This file is automatically discovered by pytest.
It sets up paths and the fixtures shared across test packages.
"""
import sys
from pathlib import Path

import numpy as np
import pytest

# Add both backend/ and project root to sys.path to make imports work correctly
backend_dir = Path(__file__).parent.parent
project_root = backend_dir.parent

if str(backend_dir) not in sys.path:
    sys.path.insert(0, str(backend_dir))
if str(project_root) not in sys.path:
    sys.path.insert(0, str(project_root))

from backend.src.data.synthetic import generate_compound, generate_synthetic
from backend.src.schemas import (
    ExperimentConfig,
    HeadStrategy,
    LabelKind,
    LabelSpace,
    NetworkSpec,
    SyntheticConfig,
    TrainConfig,
)

FIXTURES_DIR = Path(__file__).parent / "fixtures"


@pytest.fixture(autouse=True)
def debug_checks_on(monkeypatch):
    """Every test runs with the NaN/inf assertions enabled, whatever the environment says."""
    monkeypatch.setattr("backend.src.config.DEBUG_CHECKS", True)


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES_DIR


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def emotion_space() -> LabelSpace:
    return LabelSpace(name="emotion", classes=["Happy", "Sad", "Angry"], kind=LabelKind.CATEGORICAL_EXCLUSIVE)


@pytest.fixture
def au_space() -> LabelSpace:
    return LabelSpace(name="au", classes=["AU6", "AU12"], kind=LabelKind.MULTILABEL_BINARY)


@pytest.fixture
def small_synthetic_config() -> SyntheticConfig:
    """A quick synthetic benchmark: 120 samples per dataset, 8-dimensional features."""
    return SyntheticConfig(samples_per_dataset=120, projection_dim=8, seed=3)


@pytest.fixture
def small_datasets(small_synthetic_config):
    emotion, au, ground_truth = generate_synthetic(small_synthetic_config)
    return emotion, au, ground_truth


@pytest.fixture
def compound_dataset(small_synthetic_config):
    return generate_compound(small_synthetic_config)


@pytest.fixture
def sjmt_spec(small_datasets) -> NetworkSpec:
    emotion, au, _ = small_datasets
    return NetworkSpec(
        input_dim=emotion.feature_dim,
        width=16,
        blocks=2,
        head_strategy=HeadStrategy.SHARED_SELECTIVE,
        label_spaces=[emotion.label_space, au.label_space],
        seed=5,
    )


@pytest.fixture
def quick_train_config() -> TrainConfig:
    return TrainConfig(batch_size=16, lr0=0.05, decay_every_steps=50, total_steps=30, seed=9, log_every=10)


@pytest.fixture
def tiny_experiment_config(tmp_path) -> ExperimentConfig:
    """Full experiment config small enough for end-to-end pipeline tests."""
    return ExperimentConfig.model_validate({
        "seed": 1,
        "output_dir": str(tmp_path / "outputs"),
        "synthetic": {
            "samples_per_dataset": 80,
            "projection_dim": 8,
            "compound_counts": {
                "angrily disgusted": 18,
                "angrily surprised": 18,
                "fearfully angry": 18,
                "fearfully surprised": 18,
                "happily disgusted": 30,
                "happily surprised": 18,
                "sadly angry": 16,
                "sadly disgusted": 20,
            },
        },
        "network": {"width": 8, "blocks": 1},
        "train": {"batch_size": 16, "total_steps": 20, "decay_every_steps": 10, "log_every": 10},
        "benchmark": {"seeds": [0], "compound_seeds": [0]},
    }).resolved()
