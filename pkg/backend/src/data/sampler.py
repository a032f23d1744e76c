import logging
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from ..exceptions import ContractError, DatasetValidationError, EmptyDatasetError
from ..losses.targets import MaskedTarget
from ..schemas import SamplingMode
from .dataset import Dataset
from .label_space import LabelUnion

logger = logging.getLogger(__name__)


@dataclass
class Batch:
    features: np.ndarray
    masked_targets: List[MaskedTarget]
    dataset_ids: List[str]
    sample_ids: List[str]

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def source(self) -> str:
        """Datasets present in the batch, e.g. 'emotion' or 'au+emotion'."""
        return "+".join(sorted(set(self.dataset_ids)))

    def space_targets(self, union: LabelUnion, space_name: str) -> np.ndarray:
        """[B x |space|] targets restricted to one label space."""
        columns = union.slice(space_name)
        return np.stack([target.targets[columns] for target in self.masked_targets])


class _EpochCursor:
    """
    Walks a seeded permutation without replacement and reshuffles when it runs out.

    A batch that straddles two epochs takes the whole tail of the old epoch and
    fills up from the new one with indices not already in the batch.
    """

    def __init__(self, size: int, rng: np.random.Generator):
        self.size = size
        self.rng = rng
        self.order = rng.permutation(size)
        self.position = 0
        self.epoch = 0

    def take(self, count: int) -> np.ndarray:
        if count >= self.size:
            self._reshuffle()
            self.position = self.size
            return self.order.copy()
        if self.position + count > self.size:
            tail = self.order[self.position:]
            self._reshuffle()
            fresh = ~np.isin(self.order, tail)
            head = self.order[fresh][:count - len(tail)]
            self.order = np.concatenate([head, self.order[~np.isin(self.order, head)]])
            self.position = len(head)
            return np.concatenate([tail, head])
        chosen = self.order[self.position:self.position + count]
        self.position += count
        return chosen

    def _reshuffle(self) -> None:
        self.order = self.rng.permutation(self.size)
        self.position = 0
        self.epoch += 1


class BatchSampler:
    """
    Draws training batches from several datasets that share a label union.

    mixed: uniform sampling from the concatenation of all datasets; every sample
        carries its own dataset mask.
    alternating: batch t is drawn wholly from dataset t mod K.

    Both modes sample without replacement within an epoch and reshuffle with the
    sampler's own seeded generator.
    """

    def __init__(
        self,
        datasets: Sequence[Dataset],
        union: LabelUnion,
        mode: SamplingMode,
        batch_size: int,
        rng: np.random.Generator,
    ):
        if batch_size < 1:
            raise ContractError(f"batch_size must be >= 1, got {batch_size}")
        if not datasets:
            raise EmptyDatasetError("no datasets to sample from")
        for dataset in datasets:
            if len(dataset) == 0:
                raise EmptyDatasetError(f"dataset '{dataset.name}' is empty")
        dims = {dataset.feature_dim for dataset in datasets}
        if len(dims) != 1:
            raise DatasetValidationError(f"datasets disagree on feature dimension: {sorted(dims)}")

        self.datasets = list(datasets)
        self.union = union
        self.mode = SamplingMode(mode)
        self.batch_size = batch_size
        self.rng = rng
        self.step = 0

        self._targets = []
        self._masks = []
        for dataset in self.datasets:
            targets, mask = dataset.union_targets(union)
            self._targets.append(targets)
            self._masks.append(mask)

        if self.mode == SamplingMode.MIXED:
            self._owner = np.concatenate([np.full(len(d), k) for k, d in enumerate(self.datasets)])
            self._row = np.concatenate([np.arange(len(d)) for d in self.datasets])
            self._cursors = [_EpochCursor(len(self._owner), rng)]
        else:
            self._cursors = [_EpochCursor(len(d), rng) for d in self.datasets]

    def sample_batch(self) -> Batch:
        """Returns the next batch and advances the sampler by one step."""
        if self.mode == SamplingMode.MIXED:
            picks = self._cursors[0].take(self.batch_size)
            pairs = [(int(self._owner[i]), int(self._row[i])) for i in picks]
        else:
            k = self.step % len(self.datasets)
            pairs = [(k, int(i)) for i in self._cursors[k].take(self.batch_size)]
        self.step += 1
        return self._assemble(pairs)

    def __iter__(self):
        return self

    def __next__(self) -> Batch:
        return self.sample_batch()

    def _assemble(self, pairs) -> Batch:
        features = np.stack([self.datasets[k].features[i] for k, i in pairs])
        targets = [
            MaskedTarget(targets=self._targets[k][i], mask=self._masks[k], dataset_id=self.datasets[k].name)
            for k, i in pairs
        ]
        return Batch(
            features=features,
            masked_targets=targets,
            dataset_ids=[self.datasets[k].name for k, _ in pairs],
            sample_ids=[self.datasets[k].sample_ids[i] for k, i in pairs],
        )


def sample_batch(sampler: BatchSampler) -> Batch:
    """Functional form of BatchSampler.sample_batch."""
    return sampler.sample_batch()
