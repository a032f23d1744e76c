import logging
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from ..exceptions import DatasetValidationError, EmptyDatasetError
from ..losses.targets import MaskedTarget
from ..schemas import LabelSpace
from .label_space import LabelUnion

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Sample:
    sample_id: str
    features: np.ndarray
    masked_target: MaskedTarget


@dataclass
class Dataset:
    """
    Samples annotated on a single label space.

    Attributes:
        name: Dataset identifier; equals the label space name.
        label_space: Classes this dataset annotates.
        features: [n x d] float64 feature matrix.
        labels: [n x |space|] 0/1 matrix (one-hot rows for categorical spaces).
        sample_ids: n unique identifiers.
    """
    name: str
    label_space: LabelSpace
    features: np.ndarray
    labels: np.ndarray
    sample_ids: List[str] = field(default_factory=list)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.float64)
        if not self.sample_ids:
            self.sample_ids = [f"{self.name}-{i:06d}" for i in range(self.features.shape[0])]
        self.validate()

    def validate(self) -> None:
        n = self.features.shape[0]
        if self.features.ndim != 2:
            raise DatasetValidationError(f"{self.name}: features must be 2-d, got shape {self.features.shape}")
        if self.labels.shape != (n, self.label_space.size):
            raise DatasetValidationError(
                f"{self.name}: labels shape {self.labels.shape} does not match {n} samples x {self.label_space.size} classes"
            )
        if len(self.sample_ids) != n:
            raise DatasetValidationError(f"{self.name}: {len(self.sample_ids)} sample ids for {n} samples")
        if not np.isin(self.labels, (0.0, 1.0)).all():
            raise DatasetValidationError(f"{self.name}: labels must be 0/1")
        if self.label_space.is_categorical and n and not np.all(self.labels.sum(axis=1) == 1.0):
            raise DatasetValidationError(f"{self.name}: categorical rows must hold exactly one positive label")

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    @property
    def class_indices(self) -> np.ndarray:
        """Argmax class index per sample (categorical spaces)."""
        return np.argmax(self.labels, axis=1)

    def subset(self, indices: Sequence[int]) -> "Dataset":
        indices = np.asarray(indices, dtype=int)
        return Dataset(
            name=self.name,
            label_space=self.label_space,
            features=self.features[indices],
            labels=self.labels[indices],
            sample_ids=[self.sample_ids[i] for i in indices],
        )

    def union_targets(self, union: LabelUnion) -> Tuple[np.ndarray, np.ndarray]:
        """Returns ([n x |union|] targets, [|union|] mask) for this dataset."""
        return union.embed(self.name, self.labels), union.mask(self.name)

    def masked_target(self, index: int, union: LabelUnion) -> MaskedTarget:
        targets = np.zeros(union.size, dtype=np.float64)
        targets[union.slice(self.name)] = self.labels[index]
        return MaskedTarget(targets=targets, mask=union.mask(self.name), dataset_id=self.name)

    def samples(self, union: LabelUnion) -> Iterator[Sample]:
        for i in range(len(self)):
            yield Sample(sample_id=self.sample_ids[i], features=self.features[i], masked_target=self.masked_target(i, union))

    def equals(self, other: "Dataset") -> bool:
        return (
            self.name == other.name
            and self.label_space == other.label_space
            and self.sample_ids == other.sample_ids
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.labels, other.labels)
        )


@dataclass
class GroundTruth:
    """
    Full generative labels of synthetic samples: the emotion and the (post-flip) AU vector.

    Rows cover the samples of every generated dataset, including those whose
    dataset only exposes one of the two.
    """
    sample_ids: List[str]
    datasets: List[str]
    emotions: List[str]
    au_ids: List[int]
    aus: np.ndarray

    def __post_init__(self):
        self.aus = np.asarray(self.aus, dtype=np.int64)
        self._row = {sample_id: i for i, sample_id in enumerate(self.sample_ids)}

    def __len__(self) -> int:
        return len(self.sample_ids)

    def rows_for(self, sample_ids: Sequence[str]) -> np.ndarray:
        missing = [s for s in sample_ids if s not in self._row]
        if missing:
            raise DatasetValidationError(f"ground truth has no rows for {len(missing)} sample(s), first: {missing[0]}")
        return np.array([self._row[s] for s in sample_ids], dtype=int)

    def emotions_for(self, sample_ids: Sequence[str]) -> List[str]:
        return [self.emotions[i] for i in self.rows_for(sample_ids)]

    def aus_for(self, sample_ids: Sequence[str]) -> np.ndarray:
        return self.aus[self.rows_for(sample_ids)]

    def equals(self, other: "GroundTruth") -> bool:
        return (
            self.sample_ids == other.sample_ids
            and self.datasets == other.datasets
            and self.emotions == other.emotions
            and list(self.au_ids) == list(other.au_ids)
            and np.array_equal(self.aus, other.aus)
        )


def train_test_split(dataset: Dataset, test_fraction: float, seed: int) -> Tuple[Dataset, Dataset]:
    """Deterministic random split. The test part gets round(n * test_fraction) samples."""
    if len(dataset) == 0:
        raise EmptyDatasetError(f"cannot split empty dataset '{dataset.name}'")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(dataset))
    n_test = int(round(len(dataset) * test_fraction))
    test_idx = np.sort(order[:n_test])
    train_idx = np.sort(order[n_test:])
    return dataset.subset(train_idx), dataset.subset(test_idx)


def balanced_split(dataset: Dataset, per_class: int, seed: int) -> Tuple[Dataset, Dataset]:
    """
    Takes `per_class` random samples of every class for training; the remainder is the test set.

    Classes with fewer than `per_class` samples contribute all of them to training.
    """
    if len(dataset) == 0:
        raise EmptyDatasetError(f"cannot split empty dataset '{dataset.name}'")
    rng = np.random.default_rng(seed)
    labels = dataset.class_indices
    train_idx: List[int] = []
    for class_index, class_name in enumerate(dataset.label_space.classes):
        members = np.flatnonzero(labels == class_index)
        if len(members) <= per_class:
            logger.warning(f"{dataset.name}: class '{class_name}' has {len(members)} samples, none left for testing")
        chosen = rng.permutation(members)[:per_class]
        train_idx.extend(int(i) for i in chosen)
    train_mask = np.zeros(len(dataset), dtype=bool)
    train_mask[train_idx] = True
    return dataset.subset(np.flatnonzero(train_mask)), dataset.subset(np.flatnonzero(~train_mask))
