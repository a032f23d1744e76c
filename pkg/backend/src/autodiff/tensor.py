import itertools
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .. import config
from ..exceptions import ContractError, NumericalError

logger = logging.getLogger(__name__)

_node_ids = itertools.count()
_tape_stack: List["Tape"] = []

# Backward rules keyed by primitive name. A rule receives the tape entry and the
# upstream gradient and returns one gradient (or None) per input.
BackwardRule = Callable[["TapeEntry", np.ndarray], Tuple[Optional[np.ndarray], ...]]
BACKWARD_RULES: Dict[str, BackwardRule] = {}


def backward_rule(op_name: str):
    """Registers the decorated function as the backward rule of `op_name`."""
    def register(rule: BackwardRule) -> BackwardRule:
        BACKWARD_RULES[op_name] = rule
        return rule
    return register


def check_finite(array: np.ndarray, op_name: str, stage: str) -> None:
    """Raises NumericalError if `array` holds NaN or inf and debug checks are on."""
    if config.DEBUG_CHECKS and not np.all(np.isfinite(array)):
        raise NumericalError(f"Primitive '{op_name}' produced non-finite values during {stage}.")


class Tensor:
    """
    An n-dimensional float64 array with an optional gradient slot.

    Tensors produced by primitives while a Tape is active are recorded on it;
    outside a tape they are plain values and safe to share for read-only use.
    """

    def __init__(self, data: Any, requires_grad: bool = False, name: Optional[str] = None):
        self.data: np.ndarray = np.array(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self.name = name
        self.node_id = next(_node_ids)

    @classmethod
    def _wrap(cls, array: np.ndarray) -> "Tensor":
        """Wraps a freshly computed array without copying it."""
        tensor = cls.__new__(cls)
        tensor.data = np.asarray(array, dtype=np.float64)
        tensor.requires_grad = False
        tensor.grad = None
        tensor.name = None
        tensor.node_id = next(_node_ids)
        return tensor

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def values(self) -> np.ndarray:
        """Row-major flat view of the data."""
        return self.data.reshape(-1)

    def item(self) -> float:
        if self.size != 1:
            raise ContractError(f"item() needs a one-element tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data

    def zero_grad(self) -> None:
        self.grad = None

    def detach(self) -> "Tensor":
        return Tensor._wrap(self.data)

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{label}, requires_grad={self.requires_grad})"

    # Operator sugar over the primitives in ops.py
    def __add__(self, other: "Tensor") -> "Tensor":
        from . import ops
        return ops.add(self, other)

    def __sub__(self, other: "Tensor") -> "Tensor":
        from . import ops
        return ops.sub(self, other)

    def __mul__(self, other: "Tensor") -> "Tensor":
        from . import ops
        return ops.mul(self, other)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        from . import ops
        return ops.matmul(self, other)


@dataclass
class TapeEntry:
    """One recorded primitive: its inputs, its output and whatever its backward rule needs."""
    op: str
    inputs: Tuple[Tensor, ...]
    output: Tensor
    context: Dict[str, Any] = field(default_factory=dict)


class Tape:
    """
    Ordered record of the primitives evaluated while the tape is active.

    Usage:
        with Tape() as tape:
            loss = model_loss(params)
        tape.backward(loss)
    """

    def __init__(self):
        self.entries: List[TapeEntry] = []
        self._produced: Dict[int, int] = {} # output node id -> entry index

    def __enter__(self) -> "Tape":
        _tape_stack.append(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        _tape_stack.remove(self)

    def __len__(self) -> int:
        return len(self.entries)

    def record(self, op: str, inputs: Sequence[Tensor], output: Tensor, context: Dict[str, Any]) -> None:
        if op not in BACKWARD_RULES:
            raise ContractError(f"No backward rule registered for primitive '{op}'")
        self._produced[output.node_id] = len(self.entries)
        self.entries.append(TapeEntry(op=op, inputs=tuple(inputs), output=output, context=context))

    def backward(self, root: Tensor) -> None:
        """
        Fills `.grad` of every requires_grad tensor reachable from `root` with d(root)/d(tensor).

        Gradients are added to any gradient already present, so a tensor used in
        several branches, or across several tapes, accumulates the sum.

        Raises:
            ContractError: If root has more than one element or was not produced on this tape.
        """
        if root.size != 1:
            raise ContractError(f"backward() needs a scalar root, got shape {root.shape}")
        if root.node_id not in self._produced:
            raise ContractError("backward() root was not produced on this tape")

        pending: Dict[int, np.ndarray] = {root.node_id: np.ones_like(root.data)}
        leaves: Dict[int, Tensor] = {}

        # Entries are in topological order, so walking them backwards finishes every
        # node's gradient before it is consumed; each entry is visited once.
        for entry in reversed(self.entries):
            upstream = pending.pop(entry.output.node_id, None)
            if upstream is None:
                continue
            _accumulate(entry.output, upstream)
            rule = BACKWARD_RULES[entry.op]
            input_grads = rule(entry, upstream)
            for tensor, grad in zip(entry.inputs, input_grads):
                if grad is None or not tensor.requires_grad:
                    continue
                check_finite(grad, entry.op, "backward")
                if tensor.node_id in pending:
                    pending[tensor.node_id] = pending[tensor.node_id] + grad
                else:
                    pending[tensor.node_id] = grad
                if tensor.node_id not in self._produced:
                    leaves[tensor.node_id] = tensor

        for node_id, grad in pending.items():
            if node_id in leaves:
                _accumulate(leaves[node_id], grad)


def _accumulate(tensor: Tensor, grad: np.ndarray) -> None:
    grad = np.broadcast_to(grad, tensor.shape)
    tensor.grad = np.array(grad, dtype=np.float64) if tensor.grad is None else tensor.grad + grad


def active_tape() -> Optional[Tape]:
    """Returns the innermost active tape, or None when primitives should not record."""
    return _tape_stack[-1] if _tape_stack else None


def record(op: str, inputs: Sequence[Tensor], output: Tensor, **context: Any) -> Tensor:
    """Finishes a primitive: checks its output and records it on the active tape when needed."""
    check_finite(output.data, op, "forward")
    tape = active_tape()
    if tape is not None and any(t.requires_grad for t in inputs):
        output.requires_grad = True
        tape.record(op, inputs, output, context)
    return output


def backward(tape: Tape, root: Tensor) -> None:
    """Runs reverse-mode differentiation of `root` over `tape`. See Tape.backward."""
    tape.backward(root)
