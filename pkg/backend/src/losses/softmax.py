import numpy as np
from scipy.special import logsumexp, softmax

from ..autodiff.tensor import Tensor, TapeEntry, backward_rule, record
from ..exceptions import ContractError, ShapeError
from .selective import LossValue


def _check_onehot(onehot: np.ndarray) -> None:
    bad_values = ~np.isin(onehot, (0.0, 1.0))
    if bad_values.any():
        row = int(np.argwhere(bad_values)[0][0])
        raise ContractError(f"softmax_cross_entropy: row {row} is not one-hot (values other than 0/1)")
    sums = onehot.sum(axis=1)
    if np.any(sums != 1.0):
        row = int(np.flatnonzero(sums != 1.0)[0])
        raise ContractError(f"softmax_cross_entropy: row {row} has {int(sums[row])} positive entries, expected exactly 1")


def softmax_cross_entropy(logits: Tensor, onehot) -> LossValue:
    """
    Mean over the batch of -log softmax(logits)[true class], via log-sum-exp.

    Raises:
        ShapeError: If logits and onehot shapes differ.
        ContractError: If a onehot row is not a single 1 among 0s.
    """
    logits = logits if isinstance(logits, Tensor) else Tensor(logits)
    y = onehot.data if isinstance(onehot, Tensor) else np.asarray(onehot, dtype=np.float64)
    if logits.data.ndim != 2 or y.shape != logits.shape:
        raise ShapeError(
            f"softmax_cross_entropy: logits {logits.shape} and onehot {y.shape} must be equal [B x C] shapes",
            shapes=(logits.shape, y.shape),
        )
    _check_onehot(y)
    per_sample = logsumexp(logits.data, axis=1) - (logits.data * y).sum(axis=1)
    out = record("softmax_cross_entropy", (logits,), Tensor._wrap(np.array(per_sample.mean())), y=y)
    return LossValue(tensor=out, normalizer_used=(1,) * logits.shape[0])


@backward_rule("softmax_cross_entropy")
def _softmax_cross_entropy_backward(entry: TapeEntry, grad: np.ndarray):
    (logits,) = entry.inputs
    y = entry.context["y"]
    return ((softmax(logits.data, axis=1) - y) / logits.shape[0] * float(grad),)
