"""
Mean AU scores per emotion, and how well they recover the emotion -> AU map.

Test samples are grouped by emotion (the predicted emotion by default, or the
true one) and the sigmoid AU scores of each group are averaged. The coherence
score then asks, per emotion, what share of the top-k scored AUs belong to the
emotion's generating AU set.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Union

import numpy as np
import pandas as pd

from ..data.dataset import Dataset
from ..data.facs import AU_SPACE_NAME, EMOTION_SPACE_NAME, au_name
from ..exceptions import ContractError
from ..nn.network import Network
from ..schemas import GroupBy
from .predict import predict

logger = logging.getLogger(__name__)


@dataclass
class AUScoreMatrix:
    """
    Attributes:
        emotions: Row labels.
        aus: Column labels ("AU6", ...).
        scores: [emotions x AUs] mean sigmoid scores; rows without samples are all zero.
        counts: Samples per row; they sum to the test-set size.
        group_by: Whether rows group by predicted or true emotion.
    """
    emotions: List[str]
    aus: List[str]
    scores: np.ndarray
    counts: np.ndarray
    group_by: GroupBy = GroupBy.PREDICTED

    @property
    def empty_rows(self) -> List[str]:
        return [emotion for emotion, count in zip(self.emotions, self.counts) if count == 0]

    def row(self, emotion: str) -> np.ndarray:
        return self.scores[self.emotions.index(emotion)]

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.scores, columns=self.aus)
        frame.insert(0, "count", self.counts.astype(np.int64))
        frame.insert(0, "emotion", self.emotions)
        return frame

    @classmethod
    def from_frame(cls, frame: pd.DataFrame, group_by: GroupBy = GroupBy.PREDICTED) -> "AUScoreMatrix":
        aus = [c for c in frame.columns if c not in ("emotion", "count")]
        return cls(
            emotions=frame["emotion"].tolist(),
            aus=aus,
            scores=frame[aus].to_numpy(dtype=np.float64),
            counts=frame["count"].to_numpy(dtype=np.int64),
            group_by=group_by,
        )


@dataclass
class CoherenceResult:
    """Top-k precision per emotion plus their macro average over the emotions that qualify."""
    precision: Dict[str, float]
    k: Dict[str, int]
    macro: float
    excluded: List[str] = field(default_factory=list)


def au_mean_score_matrix(
    net: Network,
    testset: Union[Dataset, np.ndarray],
    group_by: GroupBy = GroupBy.PREDICTED,
    truth_emotions: Optional[Sequence[str]] = None,
    emotion_space: str = EMOTION_SPACE_NAME,
    au_space: str = AU_SPACE_NAME,
) -> AUScoreMatrix:
    """
    Mean sigmoid AU scores grouped by emotion.

    Args:
        net: A network carrying both the emotion and the AU label spaces.
        testset: Dataset or [n x d] feature matrix.
        group_by: predicted (default) or truth.
        truth_emotions: True emotion per sample; needed for group_by=truth unless
            testset is an emotion-labelled Dataset.

    Raises:
        ContractError: Empty test set, or group_by=truth without true emotions.
    """
    features = testset.features if isinstance(testset, Dataset) else np.asarray(testset, dtype=np.float64)
    if features.shape[0] == 0:
        raise ContractError("AU score matrix needs a non-empty test set")
    predictions = predict(net, features, spaces=[emotion_space, au_space])
    emotions = net.union.space(emotion_space).classes
    aus = net.union.space(au_space).classes

    if GroupBy(group_by) == GroupBy.PREDICTED:
        groups = predictions[emotion_space].class_indices
    else:
        if truth_emotions is None and isinstance(testset, Dataset) and testset.name == emotion_space:
            groups = testset.class_indices
        elif truth_emotions is not None:
            if len(truth_emotions) != features.shape[0]:
                raise ContractError(f"{len(truth_emotions)} true emotions for {features.shape[0]} samples")
            groups = np.array([emotions.index(e) for e in truth_emotions], dtype=int)
        else:
            raise ContractError("group_by=truth needs the true emotion of every test sample")

    au_scores = predictions[au_space].scores
    scores = np.zeros((len(emotions), len(aus)))
    counts = np.zeros(len(emotions), dtype=np.int64)
    for row in range(len(emotions)):
        members = groups == row
        counts[row] = int(members.sum())
        if counts[row]:
            scores[row] = au_scores[members].mean(axis=0)
    matrix = AUScoreMatrix(emotions=list(emotions), aus=list(aus), scores=scores, counts=counts, group_by=GroupBy(group_by))
    if matrix.empty_rows:
        logger.warning(f"No test samples grouped under {matrix.empty_rows}; their AU-score rows are zero")
    return matrix


def coherence_score(
    matrix: AUScoreMatrix,
    truth_map: Mapping[str, Sequence[Union[int, str]]],
    k: Optional[int] = None,
) -> CoherenceResult:
    """
    Per-emotion precision of the top-k scored AUs against the generating AU set.

    k defaults to the size of each emotion's set. Ties go to the lowest AU column.
    Emotions with an empty set and rows without samples are reported as excluded
    and left out of the macro average.

    Raises:
        ContractError: If k < 1 or k exceeds the number of AU columns.
    """
    if k is not None and not 1 <= k <= len(matrix.aus):
        raise ContractError(f"coherence k must lie in [1, {len(matrix.aus)}], got {k}")
    precision: Dict[str, float] = {}
    used_k: Dict[str, int] = {}
    excluded: List[str] = []
    for row, emotion in enumerate(matrix.emotions):
        generating = {au if isinstance(au, str) else au_name(au) for au in truth_map.get(emotion, ())}
        if not generating or matrix.counts[row] == 0:
            excluded.append(emotion)
            continue
        top = k if k is not None else len(generating)
        if top > len(matrix.aus):
            raise ContractError(f"emotion '{emotion}' needs top-{top} of only {len(matrix.aus)} AUs")
        order = np.argsort(-matrix.scores[row], kind="stable")[:top]
        hits = sum(1 for j in order if matrix.aus[j] in generating)
        precision[emotion] = hits / top
        used_k[emotion] = top
    macro = float(np.mean(list(precision.values()))) if precision else float("nan")
    if not precision:
        logger.warning("No emotion qualifies for the coherence score")
    return CoherenceResult(precision=precision, k=used_k, macro=macro, excluded=excluded)
