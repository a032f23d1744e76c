import numpy as np
import pytest

from backend.src.data.dataset import Dataset
from backend.src.data.label_space import LabelUnion
from backend.src.data.sampler import BatchSampler, sample_batch
from backend.src.exceptions import ContractError, DatasetValidationError, EmptyDatasetError
from backend.src.schemas import SamplingMode


@pytest.fixture
def union(small_datasets) -> LabelUnion:
    emotion, au, _ = small_datasets
    return LabelUnion([emotion.label_space, au.label_space])


def _sampler(small_datasets, union, mode, batch_size=16, seed=0) -> BatchSampler:
    emotion, au, _ = small_datasets
    return BatchSampler([emotion, au], union, mode, batch_size, np.random.default_rng(seed))


def test_alternating_batches_come_from_one_dataset_each(small_datasets, union):
    sampler = _sampler(small_datasets, union, SamplingMode.ALTERNATING)
    sources = [sample_batch(sampler).source for _ in range(6)]
    assert sources == ["emotion", "au", "emotion", "au", "emotion", "au"]


def test_mixed_batches_draw_in_proportion_to_dataset_size(small_datasets, union):
    sampler = _sampler(small_datasets, union, SamplingMode.MIXED, batch_size=64)
    ids = [dataset_id for _ in range(200) for dataset_id in sampler.sample_batch().dataset_ids]
    assert np.mean([d == "emotion" for d in ids]) == pytest.approx(0.5, abs=0.02)


def test_every_target_carries_its_dataset_mask(small_datasets, union):
    batch = _sampler(small_datasets, union, SamplingMode.MIXED, batch_size=64).sample_batch()
    assert batch.source == "au+emotion"
    for target, dataset_id in zip(batch.masked_targets, batch.dataset_ids):
        assert target.dataset_id == dataset_id
        assert np.array_equal(target.mask, union.mask(dataset_id))
        assert not np.any(target.targets[~target.mask])


def test_space_targets(small_datasets, union):
    emotion, _, _ = small_datasets
    batch = _sampler(small_datasets, union, SamplingMode.ALTERNATING).sample_batch()
    rows = [emotion.sample_ids.index(s) for s in batch.sample_ids]
    assert np.array_equal(batch.space_targets(union, "emotion"), emotion.labels[rows])


def test_no_repeats_within_an_epoch(small_datasets, union):
    sampler = _sampler(small_datasets, union, SamplingMode.MIXED, batch_size=60)
    ids = [s for _ in range(4) for s in sampler.sample_batch().sample_ids]
    assert len(set(ids)) == 240


def test_batches_straddling_an_epoch_skip_nothing(small_datasets, union):
    emotion, au, _ = small_datasets
    total = len(emotion) + len(au)
    batch_size = 70
    sampler = _sampler(small_datasets, union, SamplingMode.MIXED, batch_size=batch_size)
    batches = [sampler.sample_batch().sample_ids for _ in range(total // batch_size + 2)]
    for ids in batches:
        assert len(set(ids)) == batch_size
    drawn = [s for ids in batches for s in ids]
    assert len(set(drawn[:total])) == total


def test_same_seed_same_batches(small_datasets, union):
    first = _sampler(small_datasets, union, SamplingMode.MIXED, seed=3)
    second = _sampler(small_datasets, union, SamplingMode.MIXED, seed=3)
    for _ in range(20):
        assert first.sample_batch().sample_ids == second.sample_batch().sample_ids


def test_batch_larger_than_dataset(small_datasets, union):
    emotion, _, _ = small_datasets
    sampler = BatchSampler([emotion], union, SamplingMode.ALTERNATING, 500, np.random.default_rng(0))
    assert len(sampler.sample_batch()) == len(emotion)


def test_invalid_samplers(small_datasets, union, emotion_space):
    emotion, au, _ = small_datasets
    rng = np.random.default_rng(0)
    with pytest.raises(ContractError):
        BatchSampler([emotion], union, SamplingMode.MIXED, 0, rng)
    with pytest.raises(EmptyDatasetError):
        BatchSampler([], union, SamplingMode.MIXED, 4, rng)
    with pytest.raises(EmptyDatasetError):
        BatchSampler([emotion.subset([])], union, SamplingMode.MIXED, 4, rng)
    narrow = Dataset(name="au", label_space=au.label_space, features=au.features[:, :3], labels=au.labels)
    with pytest.raises(DatasetValidationError):
        BatchSampler([emotion, narrow], union, SamplingMode.MIXED, 4, rng)
