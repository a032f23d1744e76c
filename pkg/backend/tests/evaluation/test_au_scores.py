import numpy as np
import pytest

from backend.src.evaluation import AUScoreMatrix, au_mean_score_matrix, coherence_score
from backend.src.exceptions import ContractError
from backend.src.nn.network import init_network
from backend.src.schemas import GroupBy


@pytest.fixture
def zeroed_net(sjmt_spec):
    net = init_network(sjmt_spec)
    for _, tensor in net.parameters():
        tensor.data[...] = 0.0
    return net


@pytest.fixture
def pattern_matrix() -> AUScoreMatrix:
    return AUScoreMatrix(
        emotions=["Happy", "Sad", "Neutral"],
        aus=["AU6", "AU12", "AU17", "AU25"],
        scores=np.array([
            [0.9, 0.8, 0.1, 0.7],
            [0.2, 0.6, 0.9, 0.3],
            [0.1, 0.1, 0.1, 0.1],
        ]),
        counts=np.array([10, 6, 4]),
    )


def test_zero_logits_score_every_au_at_one_half(zeroed_net, small_datasets):
    emotion, _, _ = small_datasets
    matrix = au_mean_score_matrix(zeroed_net, emotion)
    # Every emotion logit ties at 0, so every sample lands on the first emotion
    assert matrix.counts.tolist() == [len(emotion)] + [0] * 6
    assert np.all(matrix.scores[0] == 0.5)
    assert np.all(matrix.scores[1:] == 0.0)
    assert matrix.empty_rows == matrix.emotions[1:]


def test_counts_sum_to_the_test_set(sjmt_spec, small_datasets):
    emotion, _, _ = small_datasets
    matrix = au_mean_score_matrix(init_network(sjmt_spec), emotion.features)
    assert matrix.counts.sum() == len(emotion)
    assert matrix.scores.shape == (7, 10)
    assert np.all((matrix.scores >= 0.0) & (matrix.scores <= 1.0))


def test_truth_grouping(zeroed_net, small_datasets):
    emotion, au, ground_truth = small_datasets
    by_label = au_mean_score_matrix(zeroed_net, emotion, group_by=GroupBy.TRUTH)
    assert by_label.counts.tolist() == emotion.labels.sum(axis=0).astype(int).tolist()
    assert by_label.group_by == GroupBy.TRUTH

    truth = ground_truth.emotions_for(au.sample_ids)
    by_ground_truth = au_mean_score_matrix(zeroed_net, au, group_by=GroupBy.TRUTH, truth_emotions=truth)
    assert by_ground_truth.counts.sum() == len(au)
    assert by_ground_truth.counts[by_ground_truth.emotions.index("Happy")] == truth.count("Happy")


def test_matrix_contract_violations(zeroed_net, small_datasets):
    emotion, au, _ = small_datasets
    with pytest.raises(ContractError, match="non-empty"):
        au_mean_score_matrix(zeroed_net, emotion.features[:0])
    with pytest.raises(ContractError, match="true emotion"):
        au_mean_score_matrix(zeroed_net, au, group_by=GroupBy.TRUTH)
    with pytest.raises(ContractError):
        au_mean_score_matrix(zeroed_net, au, group_by=GroupBy.TRUTH, truth_emotions=["Happy"])


def test_frame_round_trip(pattern_matrix):
    frame = pattern_matrix.to_frame()
    assert frame.columns.tolist() == ["emotion", "count", "AU6", "AU12", "AU17", "AU25"]
    again = AUScoreMatrix.from_frame(frame)
    assert np.array_equal(again.scores, pattern_matrix.scores)
    assert again.counts.tolist() == [10, 6, 4]


def test_exact_patterns_are_fully_coherent(pattern_matrix):
    result = coherence_score(pattern_matrix, {"Happy": [6, 12, 25], "Sad": [12, 17], "Neutral": []})
    assert result.precision == {"Happy": 1.0, "Sad": 1.0}
    assert result.k == {"Happy": 3, "Sad": 2}
    assert result.macro == 1.0
    assert result.excluded == ["Neutral"]


def test_partial_overlap_and_fixed_k(pattern_matrix):
    result = coherence_score(pattern_matrix, {"Happy": ["AU6", "AU17"], "Sad": ["AU12", "AU17"]}, k=1)
    assert result.precision == {"Happy": 1.0, "Sad": 1.0}
    result = coherence_score(pattern_matrix, {"Happy": ["AU6", "AU17"]})
    # Top-2 of Happy is AU6, AU12
    assert result.precision == {"Happy": 0.5}
    assert result.excluded == ["Sad", "Neutral"]


def test_ties_go_to_the_lowest_column(pattern_matrix):
    assert coherence_score(pattern_matrix, {"Neutral": [6]}, k=1).precision == {"Neutral": 1.0}
    assert coherence_score(pattern_matrix, {"Neutral": [25]}, k=1).precision == {"Neutral": 0.0}


def test_rows_without_samples_are_excluded(pattern_matrix):
    pattern_matrix.counts[1] = 0
    result = coherence_score(pattern_matrix, {"Happy": [6, 12, 25], "Sad": [12, 17]})
    assert "Sad" in result.excluded and "Sad" not in result.precision


def test_nothing_qualifies(pattern_matrix):
    assert np.isnan(coherence_score(pattern_matrix, {}).macro)


def test_invalid_k(pattern_matrix):
    with pytest.raises(ContractError):
        coherence_score(pattern_matrix, {"Happy": [6]}, k=0)
    with pytest.raises(ContractError):
        coherence_score(pattern_matrix, {"Happy": [6]}, k=5)
    with pytest.raises(ContractError, match="top-5"):
        coherence_score(pattern_matrix, {"Happy": [1, 2, 4, 6, 12]})
