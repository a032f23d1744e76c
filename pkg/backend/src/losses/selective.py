"""
Sigmoid cross-entropy losses over a label union.

selective_bce sums the binary cross-entropy of each sample over the positions its
own dataset annotates and divides by that count; positions outside the mask add
nothing to the value and receive exactly zero gradient. full_bce is the same
loss with every position treated as labeled (missing labels read as 0).

Both are evaluated in logit space as

    max(p, 0) - y * p + log1p(exp(-|p|))

which equals -[y log s(p) + (1 - y) log(1 - s(p))] without ever taking the log
of a saturated sigmoid.
"""
import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from scipy.special import expit

from ..autodiff import ops
from ..autodiff.tensor import Tensor, TapeEntry, backward_rule, record
from ..exceptions import ContractError, ShapeError
from ..schemas import NormalizerMode
from .targets import MaskedTarget, stack_targets


@dataclass
class LossValue:
    """
    A batch loss.

    Attributes:
        tensor: Scalar tensor (recorded on the active tape when the logits require gradients).
        normalizer_used: Per-sample normalizer N the summed terms were divided by.
    """
    tensor: Tensor
    normalizer_used: Tuple[int, ...]

    @property
    def value(self) -> float:
        return self.tensor.item()


def sigmoid_probabilities(logits: Tensor) -> Tensor:
    """Elementwise 1 / (1 + exp(-p)); total on finite input, every output strictly inside (0, 1) for moderate logits."""
    return ops.sigmoid(logits)


def _logit_terms(p: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.maximum(p, 0.0) - y * p + np.log1p(np.exp(-np.abs(p)))


def masked_sigmoid_cross_entropy(logits: Tensor, y: np.ndarray, mask: np.ndarray, n: np.ndarray) -> Tensor:
    """
    Fused primitive: mean over rows of (sum over masked-in columns of the BCE term) / n[row].

    Args:
        logits: [B x L] tensor.
        y: [B x L] 0/1 targets.
        mask: [B x L] booleans.
        n: [B] positive normalizers.
    """
    p = logits.data
    terms = np.where(mask, _logit_terms(p, y), 0.0)
    per_sample = terms.sum(axis=1) / n
    value = np.array(per_sample.mean())
    return record("masked_sigmoid_cross_entropy", (logits,), Tensor._wrap(value), y=y, mask=mask, n=n)


@backward_rule("masked_sigmoid_cross_entropy")
def _masked_sigmoid_cross_entropy_backward(entry: TapeEntry, grad: np.ndarray):
    (logits,) = entry.inputs
    y, mask, n = entry.context["y"], entry.context["mask"], entry.context["n"]
    rows = logits.shape[0]
    local = np.where(mask, (expit(logits.data) - y) / n[:, None], 0.0) / rows
    return (local * float(grad),)


def _check_logits(op: str, logits: Tensor, rows: int) -> Tensor:
    logits = logits if isinstance(logits, Tensor) else Tensor(logits)
    if logits.data.ndim != 2:
        raise ShapeError(f"{op}: logits must be [B x L], got shape {logits.shape}", shapes=(logits.shape,))
    if logits.shape[0] != rows:
        raise ContractError(f"{op}: {logits.shape[0]} logit rows for {rows} targets")
    return logits


def _normalizers(mask: np.ndarray, normalizer: NormalizerMode) -> np.ndarray:
    if NormalizerMode(normalizer) == NormalizerMode.UNION:
        return np.full(mask.shape[0], float(mask.shape[1]))
    return mask.sum(axis=1).astype(np.float64)


def selective_bce(
    logits: Tensor,
    targets: Sequence[MaskedTarget],
    normalizer: NormalizerMode = NormalizerMode.PER_DATASET,
) -> LossValue:
    """
    Dataset-wise selective sigmoid cross-entropy, averaged over the batch.

    Args:
        logits: [B x L] logits over the label union.
        targets: One MaskedTarget per row.
        normalizer: per_dataset divides each sample by its mask size, union by L.

    Raises:
        ContractError: Empty mask, positive target outside the mask, or length mismatch.
    """
    logits = _check_logits("selective_bce", logits, len(targets))
    y, mask = stack_targets(targets, logits.shape[1])
    n = _normalizers(mask, normalizer)
    loss = masked_sigmoid_cross_entropy(logits, y, mask, n)
    return LossValue(tensor=loss, normalizer_used=tuple(int(v) for v in n))


def binary_cross_entropy(logits: Tensor, targets: np.ndarray) -> LossValue:
    """Plain sigmoid cross-entropy over every column of a [B x L] target matrix, divided by L per sample."""
    targets = np.asarray(targets, dtype=np.float64)
    logits = _check_logits("binary_cross_entropy", logits, targets.shape[0] if targets.ndim == 2 else -1)
    if targets.shape != logits.shape:
        raise ShapeError(
            f"binary_cross_entropy: targets shape {targets.shape} does not match logits {logits.shape}",
            shapes=(logits.shape, targets.shape),
        )
    mask = np.ones(targets.shape, dtype=bool)
    n = np.full(targets.shape[0], float(targets.shape[1]))
    loss = masked_sigmoid_cross_entropy(logits, targets, mask, n)
    return LossValue(tensor=loss, normalizer_used=(targets.shape[1],) * targets.shape[0])


def full_bce(logits: Tensor, targets: Sequence[MaskedTarget]) -> LossValue:
    """
    Unselective BCE: masks are ignored and every unlabeled position counts as a negative.

    Exists as the ablation that shows the cross-task penalty of ordinary BCE.
    """
    logits = _check_logits("full_bce", logits, len(targets))
    width = logits.shape[1]
    for row, target in enumerate(targets):
        if target.targets.shape != (width,):
            raise ShapeError(
                f"full_bce: sample {row} target length {target.targets.shape} does not match logits width {width}",
                shapes=(logits.shape, target.targets.shape),
            )
    return binary_cross_entropy(logits, np.stack([target.targets for target in targets]))


# --- Reference forms --- #

def _log_sigmoid(x: float) -> float:
    if x >= 0.0:
        return -math.log1p(math.exp(-x))
    return x - math.log1p(math.exp(x))


def selective_bce_reference(
    logits: np.ndarray,
    targets: Sequence[MaskedTarget],
    normalizer: NormalizerMode = NormalizerMode.PER_DATASET,
) -> float:
    """Scalar-loop evaluation of selective_bce, written independently of the fused form."""
    logits = np.asarray(logits, dtype=np.float64)
    total = 0.0
    for row, target in enumerate(targets):
        positions = [j for j in range(logits.shape[1]) if target.mask[j]]
        n = logits.shape[1] if NormalizerMode(normalizer) == NormalizerMode.UNION else len(positions)
        sample = 0.0
        for j in positions:
            p = float(logits[row, j])
            y = float(target.targets[j])
            sample -= y * _log_sigmoid(p) + (1.0 - y) * _log_sigmoid(-p)
        total += sample / n
    return total / len(targets)


def selective_bce_gradient(
    logits: np.ndarray,
    targets: Sequence[MaskedTarget],
    normalizer: NormalizerMode = NormalizerMode.PER_DATASET,
) -> np.ndarray:
    """Closed-form d(batch loss)/d(logits): (s(p) - y) / N inside each mask, 0 outside, divided by B."""
    logits = np.asarray(logits, dtype=np.float64)
    y, mask = stack_targets(targets, logits.shape[1])
    n = _normalizers(mask, normalizer)
    return np.where(mask, (expit(logits) - y) / n[:, None], 0.0) / logits.shape[0]
