from enum import Enum
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .data.facs import (
    DEFAULT_AU_IDS,
    DEFAULT_COMPOUND_CLASSES,
    DEFAULT_COMPOUND_COUNTS,
    DEFAULT_EMOTION_TO_AUS,
)


class StrictModel(BaseModel):
    """Base for every config section: unknown keys are errors, not warnings."""
    model_config = ConfigDict(extra="forbid")


# --- Label spaces --- #

class LabelKind(str, Enum):
    CATEGORICAL_EXCLUSIVE = "categorical_exclusive"
    MULTILABEL_BINARY = "multilabel_binary"


class LabelSpace(StrictModel):
    """The set of classes one dataset annotates."""
    name: str = Field(..., description="Dataset-level name of the space, e.g. 'emotion' or 'au'")
    classes: List[str] = Field(..., description="Ordered class names, unique within the space")
    kind: LabelKind

    @field_validator("classes")
    @classmethod
    def _unique_classes(cls, classes: List[str]) -> List[str]:
        duplicates = sorted({c for c in classes if classes.count(c) > 1})
        if duplicates:
            raise ValueError(f"class names must be unique within a label space, duplicated: {duplicates}")
        return classes

    @property
    def size(self) -> int:
        return len(self.classes)

    @property
    def is_categorical(self) -> bool:
        return self.kind == LabelKind.CATEGORICAL_EXCLUSIVE


# --- Network --- #

class HeadStrategy(str, Enum):
    SINGLE_TASK = "single_task"
    MULTI_HEAD = "multi_head"
    SHARED_SELECTIVE = "shared_selective"


class NetworkConfig(StrictModel):
    """Trunk shape shared by all strategies (the `network` section of the experiment config)."""
    width: int = Field(64, description="Width of the input projection and every residual block")
    blocks: int = Field(3, description="Number of residual blocks")
    normalization: bool = Field(False, description="Batch normalization inside each residual branch")
    seed: Optional[int] = Field(None, description="Initialization seed; defaults to the global seed")


class NetworkSpec(StrictModel):
    """Complete description of a network: trunk plus head strategy over concrete label spaces."""
    input_dim: int
    width: int = 64
    blocks: int = 3
    normalization: bool = False
    head_strategy: HeadStrategy
    label_spaces: List[LabelSpace] = Field(..., description="One space for single_task; every space, in union order, otherwise")
    seed: int = 0

    @model_validator(mode="after")
    def _head_arity(self) -> "NetworkSpec":
        if self.head_strategy == HeadStrategy.SINGLE_TASK and len(self.label_spaces) != 1:
            raise ValueError(f"single_task heads take exactly one label space, got {len(self.label_spaces)}")
        if not self.label_spaces:
            raise ValueError("a network needs at least one label space")
        return self


# --- Synthetic benchmark --- #

class SyntheticConfig(StrictModel):
    emotion_to_aus: Dict[str, List[int]] = Field(default_factory=lambda: {k: list(v) for k, v in DEFAULT_EMOTION_TO_AUS.items()})
    au_ids: List[int] = Field(default_factory=lambda: list(DEFAULT_AU_IDS))
    flip_noise: float = Field(0.1, ge=0.0, lt=0.5, description="Per-bit AU flip probability; 0.5 makes labels uninformative")
    projection_dim: int = Field(32, gt=0)
    feature_noise: float = Field(0.3, ge=0.0)
    samples_per_dataset: int = Field(2000, gt=0)
    test_fraction: float = Field(0.25, gt=0.0, lt=1.0, description="Held-out share of the emotion and AU datasets")
    seed: Optional[int] = None
    compound_classes: Dict[str, Tuple[str, str]] = Field(default_factory=lambda: dict(DEFAULT_COMPOUND_CLASSES))
    compound_counts: Dict[str, int] = Field(default_factory=lambda: dict(DEFAULT_COMPOUND_COUNTS))
    compound_train_per_class: int = Field(15, gt=0)
    include_compound: bool = True

    @model_validator(mode="after")
    def _aus_are_known(self) -> "SyntheticConfig":
        unknown = sorted({au for aus in self.emotion_to_aus.values() for au in aus} - set(self.au_ids))
        if unknown:
            raise ValueError(f"emotion_to_aus references AUs missing from au_ids: {unknown}")
        return self


# --- Training --- #

class Strategy(str, Enum):
    SINGLE_TASK = "single_task"
    CLASSICAL_MT = "classical_mt"
    SJMT = "sjmt"


class NormalizerMode(str, Enum):
    PER_DATASET = "per_dataset"
    UNION = "union"


class SamplingMode(str, Enum):
    MIXED = "mixed"
    ALTERNATING = "alternating"


class TrainConfig(StrictModel):
    strategy: Optional[Strategy] = None
    batch_size: int = Field(64, ge=1)
    lr0: float = Field(0.05, gt=0.0)
    decay_every_steps: int = Field(500, ge=1)
    decay_factor: float = Field(0.1, gt=0.0, le=1.0)
    total_steps: int = Field(4000, ge=1)
    seed: Optional[int] = None
    augmentation_sigma: float = Field(0.05, ge=0.0, description="Gaussian feature jitter, train mode only")
    normalizer: NormalizerMode = NormalizerMode.PER_DATASET
    full_bce: bool = Field(False, description="Ablation: ignore masks and treat missing labels as 0")
    log_every: int = Field(250, ge=1)
    eval_every: int = Field(0, ge=0, description="Validation interval in steps; 0 disables")
    checkpoint_every: int = Field(0, ge=0, description="Checkpoint interval in steps; 0 writes only the final one")


class TrainOverride(StrictModel):
    """Per-strategy overrides. batch_size and total_steps cannot be overridden."""
    lr0: Optional[float] = Field(None, gt=0.0)
    decay_every_steps: Optional[int] = Field(None, ge=1)
    decay_factor: Optional[float] = Field(None, gt=0.0, le=1.0)
    augmentation_sigma: Optional[float] = Field(None, ge=0.0)
    normalizer: Optional[NormalizerMode] = None
    full_bce: Optional[bool] = None


class TrainSection(TrainConfig):
    """The `train` section: shared defaults, per-strategy overrides and baseline choices."""
    overrides: Dict[Strategy, TrainOverride] = Field(default_factory=dict)
    single_task_datasets: List[str] = Field(default_factory=lambda: ["emotion"])

    def for_strategy(self, strategy: Strategy, seed: int) -> TrainConfig:
        base = self.model_dump(exclude={"overrides", "single_task_datasets"})
        override = self.overrides.get(strategy)
        if override is not None:
            base.update(override.model_dump(exclude_none=True))
        base["strategy"] = strategy
        base["seed"] = self.seed if self.seed is not None else seed
        return TrainConfig.model_validate(base)


# --- Evaluation --- #

class GroupBy(str, Enum):
    PREDICTED = "predicted"
    TRUTH = "truth"


class EvalConfig(StrictModel):
    group_by: GroupBy = GroupBy.PREDICTED
    coherence_k: Optional[int] = Field(None, ge=1, description="Top-k for coherence; default is each emotion's AU-set size")


class BenchmarkConfig(StrictModel):
    seeds: List[int] = Field(default_factory=lambda: [0, 1, 2, 3, 4])
    compound_seeds: List[int] = Field(default_factory=lambda: [0, 1, 2, 3, 4])


class ExperimentConfig(StrictModel):
    seed: int = 0
    output_dir: str = "outputs"
    synthetic: SyntheticConfig = Field(default_factory=SyntheticConfig)
    network: NetworkConfig = Field(default_factory=NetworkConfig)
    train: TrainSection = Field(default_factory=TrainSection)
    eval: EvalConfig = Field(default_factory=EvalConfig)
    benchmark: BenchmarkConfig = Field(default_factory=BenchmarkConfig)

    def resolved(self) -> "ExperimentConfig":
        """Copy with every unset section seed filled from the global seed."""
        resolved = self.model_copy(deep=True)
        if resolved.synthetic.seed is None:
            resolved.synthetic.seed = self.seed
        if resolved.network.seed is None:
            resolved.network.seed = self.seed
        if resolved.train.seed is None:
            resolved.train.seed = self.seed
        return resolved


# --- Artifacts --- #

class DatasetManifest(StrictModel):
    name: str
    label_space: LabelSpace
    feature_dim: int = Field(..., gt=0)
    samples_path: str = Field(..., description="CSV path, relative to the manifest's directory")
    num_samples: Optional[int] = None


class ParameterBlob(StrictModel):
    shape: List[int]
    values: List[float]


class NormStateBlob(StrictModel):
    running_mean: List[float]
    running_var: List[float]


class CheckpointFile(StrictModel):
    format_version: int
    strategy: Optional[Strategy] = None
    network_spec: NetworkSpec
    parameters: Dict[str, ParameterBlob]
    norm_states: Dict[str, NormStateBlob] = Field(default_factory=dict)
    train_seed: Optional[int] = None
    step: Optional[int] = None
    created_at: str = Field(..., description="The only timestamp in the file")


class TrainSummary(BaseModel):
    run: str
    strategy: Strategy
    datasets: List[str]
    seed: int
    total_steps: int
    final_lr: float
    final_smoothed_loss: float
    validation: Dict[str, Dict[str, float]] = Field(default_factory=dict, description="task -> metric -> value")
    config: Dict = Field(default_factory=dict)
    created_at: str
