"""
Per-class accuracy, (TP + TN) / N, for every class of a label space.

For categorical spaces the predicted and true classes are one-hot rows, so each
class gets its own one-vs-rest confusion counts; recall TP / (TP + FN) and the
overall argmax accuracy are reported alongside.
"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..data.dataset import Dataset
from ..exceptions import ContractError
from ..nn.network import Network
from ..schemas import LabelSpace
from .predict import predict

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ClassAccuracy:
    class_id: int
    class_name: str
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def n(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.n

    @property
    def support(self) -> int:
        return self.tp + self.fn

    @property
    def recall(self) -> Optional[float]:
        """None when the class has no positive samples."""
        return self.tp / self.support if self.support else None


@dataclass
class AccuracyReport:
    """
    Attributes:
        task: Label space name.
        categorical: Whether the space is categorical-exclusive.
        classes: Per-class counts, in space order.
        overall_accuracy: Share of samples whose whole label row is right (argmax class
            for categorical spaces, every bit for multilabel ones).
    """
    task: str
    categorical: bool
    classes: List[ClassAccuracy]
    overall_accuracy: float

    @property
    def mean_class_accuracy(self) -> float:
        return float(np.mean([c.accuracy for c in self.classes]))

    @property
    def mean_recall(self) -> Optional[float]:
        """Mean recall over classes with test samples."""
        recalls = [c.recall for c in self.classes if c.recall is not None]
        return float(np.mean(recalls)) if recalls else None

    def by_name(self) -> Dict[str, ClassAccuracy]:
        return {c.class_name: c for c in self.classes}

    def summary(self) -> Dict[str, float]:
        summary = {"accuracy": self.overall_accuracy, "mean_class_accuracy": self.mean_class_accuracy}
        if self.categorical and self.mean_recall is not None:
            summary["mean_recall"] = self.mean_recall
        return summary


def _as_label_matrix(values: np.ndarray, num_classes: int) -> np.ndarray:
    values = np.asarray(values)
    if values.ndim == 1:
        if values.size and (values.min() < 0 or values.max() >= num_classes):
            raise ContractError(f"class indices must lie in [0, {num_classes}), got range [{values.min()}, {values.max()}]")
        return np.eye(num_classes, dtype=np.int64)[values.astype(int)]
    return values.astype(np.int64)


def accuracy_per_class(
    predictions: np.ndarray,
    truth: np.ndarray,
    class_names: Optional[Sequence[str]] = None,
    categorical: Optional[bool] = None,
    task: str = "",
) -> AccuracyReport:
    """
    Confusion counts and accuracy per class.

    Args:
        predictions: [n] class indices or [n x C] 0/1 decisions.
        truth: Same layout as predictions.
        class_names: C names; defaults to the class index as text.
        categorical: Defaults to True for index vectors and False for matrices.
        task: Name carried into the report.

    Raises:
        ContractError: If predictions and truth are not aligned.
    """
    predictions, truth = np.asarray(predictions), np.asarray(truth)
    if predictions.shape != truth.shape:
        raise ContractError(f"predictions {predictions.shape} and truth {truth.shape} are not aligned")
    if predictions.shape[0] == 0:
        raise ContractError("accuracy needs at least one sample")
    if categorical is None:
        categorical = predictions.ndim == 1
    if predictions.ndim == 1:
        num_classes = len(class_names) if class_names is not None else int(max(predictions.max(), truth.max())) + 1
    else:
        num_classes = predictions.shape[1]
    names = list(class_names) if class_names is not None else [str(i) for i in range(num_classes)]
    if len(names) != num_classes:
        raise ContractError(f"{len(names)} class names for {num_classes} classes")

    predicted = _as_label_matrix(predictions, num_classes).astype(bool)
    actual = _as_label_matrix(truth, num_classes).astype(bool)

    classes = []
    for i, name in enumerate(names):
        p, t = predicted[:, i], actual[:, i]
        classes.append(ClassAccuracy(
            class_id=i,
            class_name=name,
            tp=int(np.sum(p & t)),
            tn=int(np.sum(~p & ~t)),
            fp=int(np.sum(p & ~t)),
            fn=int(np.sum(~p & t)),
        ))
    overall = float(np.mean(np.all(predicted == actual, axis=1)))
    return AccuracyReport(task=task, categorical=categorical, classes=classes, overall_accuracy=overall)


def space_accuracy(space: LabelSpace, predicted_labels: np.ndarray, true_labels: np.ndarray) -> AccuracyReport:
    """accuracy_per_class over [n x |space|] 0/1 matrices of one label space."""
    return accuracy_per_class(
        predicted_labels,
        true_labels,
        class_names=space.classes,
        categorical=space.is_categorical,
        task=space.name,
    )


def dataset_accuracy(net: Network, dataset: Dataset) -> AccuracyReport:
    """Evaluates `net` on a dataset over the dataset's own label space."""
    predictions = predict(net, dataset.features, spaces=[dataset.name])
    return space_accuracy(dataset.label_space, predictions[dataset.name].labels, dataset.labels)


def validation_metrics(net: Network, datasets: Sequence[Dataset]) -> Dict[str, Dict[str, float]]:
    """task -> summary metrics for each dataset whose space the network carries."""
    carried = {space.name for space in net.label_spaces}
    return {dataset.name: dataset_accuracy(net, dataset).summary() for dataset in datasets if dataset.name in carried}
