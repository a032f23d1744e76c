import logging
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Union

import numpy as np
from scipy.special import expit

from ..autodiff.tensor import Tensor
from ..data.label_space import LabelUnion
from ..nn.layers import Mode
from ..nn.network import Network
from ..schemas import LabelSpace

logger = logging.getLogger(__name__)

AU_THRESHOLD = 0.5


@dataclass
class SpacePrediction:
    """
    Decisions for one label space.

    Attributes:
        logits: [n x |space|] raw logits.
        scores: [n x |space|] sigmoid scores.
        labels: [n x |space|] 0/1 decisions: one-hot argmax for categorical spaces,
            score >= 0.5 for multilabel spaces.
    """
    space: LabelSpace
    logits: np.ndarray
    scores: np.ndarray
    labels: np.ndarray

    @property
    def class_indices(self) -> np.ndarray:
        return np.argmax(self.labels, axis=1)

    @property
    def class_names(self):
        return [self.space.classes[i] for i in self.class_indices]


@dataclass
class Predictions:
    spaces: Dict[str, SpacePrediction]

    def __getitem__(self, space_name: str) -> SpacePrediction:
        return self.spaces[space_name]

    def __contains__(self, space_name: str) -> bool:
        return space_name in self.spaces


def decide(space: LabelSpace, logits: np.ndarray) -> SpacePrediction:
    scores = expit(logits)
    if space.is_categorical:
        # np.argmax returns the lowest index among ties
        labels = np.eye(space.size, dtype=np.int64)[np.argmax(logits, axis=1)]
    else:
        labels = (scores >= AU_THRESHOLD).astype(np.int64)
    return SpacePrediction(space=space, logits=logits, scores=scores, labels=labels)


def predict(
    net: Network,
    batch: Union[np.ndarray, Tensor],
    union: Optional[LabelUnion] = None,
    spaces: Optional[Sequence[str]] = None,
) -> Predictions:
    """
    Eval-mode predictions for every label space the network carries.

    Args:
        net: Trained network.
        batch: [n x input_dim] features.
        union: Restricts predictions to the spaces of this union.
        spaces: Restricts predictions to these space names.
    """
    names = spaces if spaces is not None else (union.space_names if union is not None else [s.name for s in net.label_spaces])
    heads = sorted({net.head_for(name) for name in names})
    outputs = net.forward(batch, mode=Mode.EVAL, heads=heads)
    return Predictions(spaces={
        name: decide(net.union.space(name), outputs.space_logits(name)) for name in names
    })
