"""Selective and baseline losses over logits."""
from .targets import MaskedTarget, stack_targets
from .selective import (
    LossValue,
    binary_cross_entropy,
    full_bce,
    masked_sigmoid_cross_entropy,
    selective_bce,
    selective_bce_gradient,
    selective_bce_reference,
    sigmoid_probabilities,
)
from .softmax import softmax_cross_entropy

__all__ = [
    "MaskedTarget",
    "stack_targets",
    "LossValue",
    "binary_cross_entropy",
    "full_bce",
    "masked_sigmoid_cross_entropy",
    "selective_bce",
    "selective_bce_gradient",
    "selective_bce_reference",
    "sigmoid_probabilities",
    "softmax_cross_entropy",
]
