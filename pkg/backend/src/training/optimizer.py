import logging
from typing import Optional, Sequence

import numpy as np

from ..autodiff.tensor import Tensor
from ..exceptions import ContractError, DivergenceError

logger = logging.getLogger(__name__)


def sgd_step(
    params: Sequence[Tensor],
    grads: Optional[Sequence[Optional[np.ndarray]]] = None,
    lr: float = 0.0,
    step: Optional[int] = None,
) -> None:
    """
    Plain SGD: p <- p - lr * g for every parameter, then clears the gradients.

    Args:
        params: Trainable tensors, updated in place.
        grads: One gradient per parameter; defaults to each parameter's `.grad`.
            A missing gradient counts as zero.
        lr: Learning rate.
        step: Training step, reported in DivergenceError.

    Raises:
        DivergenceError: If any gradient holds NaN or inf. No parameter is updated then.
    """
    grads = [p.grad for p in params] if grads is None else list(grads)
    if len(grads) != len(params):
        raise ContractError(f"sgd_step got {len(grads)} gradients for {len(params)} parameters")
    for param, grad in zip(params, grads):
        if grad is not None and not np.all(np.isfinite(grad)):
            label = param.name or f"tensor {param.shape}"
            raise DivergenceError(f"Non-finite gradient for {label} at step {step}", step=step)
    for param, grad in zip(params, grads):
        if grad is not None and lr != 0.0:
            param.data -= lr * grad
        param.zero_grad()
