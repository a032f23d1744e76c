"""Dense float64 tensors with a dynamic reverse-mode tape."""
from .tensor import Tensor, Tape, TapeEntry, backward, backward_rule, BACKWARD_RULES, active_tape
from . import ops
from .gradcheck import CheckReport, ParameterCheck, finite_difference_check

__all__ = [
    "Tensor",
    "Tape",
    "TapeEntry",
    "backward",
    "backward_rule",
    "BACKWARD_RULES",
    "active_tape",
    "ops",
    "CheckReport",
    "ParameterCheck",
    "finite_difference_check",
]
