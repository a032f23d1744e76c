"""
Synthetic FACS-style benchmark with known emotion -> AU structure.

Per sample: draw a class, set the AU bits of its generating set, flip each bit
with probability flip_noise, then project the (flipped) bits with a fixed random
matrix and add Gaussian noise. The emotion dataset keeps only the emotion
label, the AU dataset keeps only the flipped AU bits, and the ground truth keeps
both. The same projection serves every dataset generated from one seed.
"""
import logging
from typing import List, Tuple

import numpy as np

from ..exceptions import ConfigError
from ..schemas import LabelKind, LabelSpace, SyntheticConfig
from .dataset import Dataset, GroundTruth
from .facs import AU_SPACE_NAME, COMPOUND_SPACE_NAME, EMOTION_SPACE_NAME, au_name

logger = logging.getLogger(__name__)

# Child seed streams spawned from the config seed, by purpose
_PROJECTION_STREAM, _EMOTION_STREAM, _AU_STREAM, _COMPOUND_STREAM = range(4)


def _validate(config: SyntheticConfig) -> None:
    # model_copy(update=...) skips pydantic validation, so re-check what generation relies on
    if not 0.0 <= config.flip_noise < 0.5:
        raise ConfigError(f"synthetic.flip_noise must be in [0, 0.5), got {config.flip_noise}")
    if config.seed is None:
        raise ConfigError("synthetic.seed must be set explicitly")
    unknown = sorted({au for aus in config.emotion_to_aus.values() for au in aus} - set(config.au_ids))
    if unknown:
        raise ConfigError(f"synthetic.emotion_to_aus references AUs missing from au_ids: {unknown}")
    if config.projection_dim <= 0:
        raise ConfigError("synthetic.projection_dim must be positive")


def _streams(seed: int) -> List[np.random.Generator]:
    return [np.random.default_rng(child) for child in np.random.SeedSequence(seed).spawn(4)]


def emotion_space(config: SyntheticConfig) -> LabelSpace:
    return LabelSpace(name=EMOTION_SPACE_NAME, classes=list(config.emotion_to_aus), kind=LabelKind.CATEGORICAL_EXCLUSIVE)


def au_space(config: SyntheticConfig) -> LabelSpace:
    return LabelSpace(name=AU_SPACE_NAME, classes=[au_name(au) for au in config.au_ids], kind=LabelKind.MULTILABEL_BINARY)


def compound_space(config: SyntheticConfig) -> LabelSpace:
    return LabelSpace(name=COMPOUND_SPACE_NAME, classes=list(config.compound_classes), kind=LabelKind.CATEGORICAL_EXCLUSIVE)


def au_patterns(config: SyntheticConfig) -> np.ndarray:
    """[emotions x AUs] 0/1 matrix of the generating emotion -> AU map."""
    column = {au: j for j, au in enumerate(config.au_ids)}
    patterns = np.zeros((len(config.emotion_to_aus), len(config.au_ids)), dtype=bool)
    for i, aus in enumerate(config.emotion_to_aus.values()):
        for au in aus:
            patterns[i, column[au]] = True
    return patterns


def projection_matrix(config: SyntheticConfig) -> np.ndarray:
    """The fixed [d x AUs] projection of a seed, scaled so feature entries have unit-order spread."""
    _validate(config)
    rng = _streams(config.seed)[_PROJECTION_STREAM]
    return rng.standard_normal((config.projection_dim, len(config.au_ids))) / np.sqrt(len(config.au_ids))


def _draw(
    rng: np.random.Generator,
    class_patterns: np.ndarray,
    class_ids: np.ndarray,
    projection: np.ndarray,
    config: SyntheticConfig,
) -> Tuple[np.ndarray, np.ndarray]:
    """Flips the class AU patterns and projects them. Returns (features, flipped AU bits)."""
    aus = class_patterns[class_ids]
    flips = rng.random(aus.shape) < config.flip_noise
    aus = aus ^ flips
    noise = rng.standard_normal((len(class_ids), config.projection_dim))
    features = aus.astype(np.float64) @ projection.T + config.feature_noise * noise
    return features, aus.astype(np.int64)


def generate_synthetic(config: SyntheticConfig) -> Tuple[Dataset, Dataset, GroundTruth]:
    """
    Generates the emotion-only dataset, the AU-only dataset and their ground truth.

    Args:
        config: Generator settings; `seed` must be set.

    Returns:
        (emotion dataset, AU dataset, ground truth covering both).

    Raises:
        ConfigError: If flip_noise is outside [0, 0.5) or the config is otherwise inconsistent.
    """
    _validate(config)
    streams = _streams(config.seed)
    projection = projection_matrix(config)
    patterns = au_patterns(config)
    emotions = list(config.emotion_to_aus)
    n = config.samples_per_dataset
    logger.info(
        f"Generating synthetic benchmark: {n} samples per dataset, flip_noise={config.flip_noise}, "
        f"feature_noise={config.feature_noise}, d={config.projection_dim}, seed={config.seed}"
    )

    rng_a = streams[_EMOTION_STREAM]
    emotion_ids_a = rng_a.integers(0, len(emotions), size=n)
    features_a, aus_a = _draw(rng_a, patterns, emotion_ids_a, projection, config)
    emotion_ds = Dataset(
        name=EMOTION_SPACE_NAME,
        label_space=emotion_space(config),
        features=features_a,
        labels=np.eye(len(emotions))[emotion_ids_a],
        sample_ids=[f"{EMOTION_SPACE_NAME}-{i:06d}" for i in range(n)],
    )

    rng_b = streams[_AU_STREAM]
    emotion_ids_b = rng_b.integers(0, len(emotions), size=n)
    features_b, aus_b = _draw(rng_b, patterns, emotion_ids_b, projection, config)
    au_ds = Dataset(
        name=AU_SPACE_NAME,
        label_space=au_space(config),
        features=features_b,
        labels=aus_b,
        sample_ids=[f"{AU_SPACE_NAME}-{i:06d}" for i in range(n)],
    )

    ground_truth = GroundTruth(
        sample_ids=emotion_ds.sample_ids + au_ds.sample_ids,
        datasets=[EMOTION_SPACE_NAME] * n + [AU_SPACE_NAME] * n,
        emotions=[emotions[i] for i in emotion_ids_a] + [emotions[i] for i in emotion_ids_b],
        au_ids=list(config.au_ids),
        aus=np.vstack([aus_a, aus_b]),
    )
    return emotion_ds, au_ds, ground_truth


def compound_patterns(config: SyntheticConfig) -> np.ndarray:
    """[compounds x AUs] 0/1 matrix: each compound's AU set is the union of its components' sets."""
    patterns = au_patterns(config)
    row = {emotion: i for i, emotion in enumerate(config.emotion_to_aus)}
    compound = np.zeros((len(config.compound_classes), len(config.au_ids)), dtype=bool)
    for i, (name, components) in enumerate(config.compound_classes.items()):
        for component in components:
            if component not in row:
                raise ConfigError(f"compound class '{name}' references unknown basic emotion '{component}'")
            compound[i] |= patterns[row[component]]
    return compound


def generate_compound(config: SyntheticConfig) -> Dataset:
    """
    Generates the compound-emotion dataset with per-class counts from `compound_counts`.

    Uses the same projection as generate_synthetic for the same seed, so a model
    trained jointly with the AU dataset sees consistent features.

    Raises:
        ConfigError: If no compound classes are configured or a component emotion is unknown.
    """
    _validate(config)
    if not config.compound_classes:
        raise ConfigError("synthetic.compound_classes is empty")
    missing = [name for name in config.compound_classes if name not in config.compound_counts]
    if missing:
        raise ConfigError(f"synthetic.compound_counts has no count for: {missing}")
    patterns = compound_patterns(config)
    projection = projection_matrix(config)
    rng = _streams(config.seed)[_COMPOUND_STREAM]

    class_ids = np.concatenate([
        np.full(config.compound_counts[name], i, dtype=int) for i, name in enumerate(config.compound_classes)
    ])
    class_ids = class_ids[rng.permutation(len(class_ids))]
    features, _ = _draw(rng, patterns, class_ids, projection, config)
    logger.info(f"Generated compound dataset: {len(class_ids)} samples over {len(config.compound_classes)} classes")
    return Dataset(
        name=COMPOUND_SPACE_NAME,
        label_space=compound_space(config),
        features=features,
        labels=np.eye(len(config.compound_classes))[class_ids],
        sample_ids=[f"{COMPOUND_SPACE_NAME}-{i:06d}" for i in range(len(class_ids))],
    )
