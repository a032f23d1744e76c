import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterator, Optional, Tuple

import numpy as np

from ..autodiff import ops
from ..autodiff.tensor import Tensor
from ..exceptions import ConfigError, ShapeError

logger = logging.getLogger(__name__)

NORM_EPS = 1e-5
NORM_MOMENTUM = 0.9


class Mode(str, Enum):
    TRAIN = "train"
    EVAL = "eval"


class Activation(str, Enum):
    RELU = "relu"
    IDENTITY = "identity"


def _normal(rng: np.random.Generator, shape: Tuple[int, ...], variance: float) -> np.ndarray:
    return rng.standard_normal(shape) * np.sqrt(variance)


class DenseLayer:
    """
    Fully connected layer h = f(x W^T + b).

    Attributes:
        W: [out x in] weight tensor.
        b: [out] bias tensor, or None for a bias-free layer (followed by normalization).
        activation: relu or identity.
    """

    def __init__(
        self,
        in_dim: int,
        out_dim: int,
        activation: Activation,
        rng: np.random.Generator,
        weight_variance: Optional[float] = None,
        bias: bool = True,
    ):
        if in_dim <= 0 or out_dim <= 0:
            raise ConfigError(f"dense layer widths must be positive, got {in_dim} -> {out_dim}")
        variance = weight_variance if weight_variance is not None else 1.0 / in_dim
        self.W = Tensor(_normal(rng, (out_dim, in_dim), variance), requires_grad=True)
        self.b = Tensor(np.zeros(out_dim), requires_grad=True) if bias else None
        self.activation = Activation(activation)

    @property
    def in_dim(self) -> int:
        return self.W.shape[1]

    @property
    def out_dim(self) -> int:
        return self.W.shape[0]

    def __call__(self, x: Tensor) -> Tensor:
        if x.data.ndim != 2 or x.shape[1] != self.in_dim:
            raise ShapeError(
                f"dense layer expects [B x {self.in_dim}] input, got {x.shape}",
                shapes=(x.shape, self.W.shape),
            )
        h = ops.matmul(x, ops.transpose(self.W))
        if self.b is not None:
            h = ops.add_bias(h, self.b)
        return ops.relu(h) if self.activation == Activation.RELU else h

    def parameters(self, prefix: str) -> Iterator[Tuple[str, Tensor]]:
        yield f"{prefix}.W", self.W
        if self.b is not None:
            yield f"{prefix}.b", self.b


@dataclass
class NormState:
    """Running per-feature statistics of a batch normalization stage."""
    running_mean: np.ndarray
    running_var: np.ndarray
    momentum: float = NORM_MOMENTUM
    updates: int = field(default=0, compare=False)

    @classmethod
    def fresh(cls, width: int) -> "NormState":
        return cls(running_mean=np.zeros(width), running_var=np.ones(width))

    def update(self, batch_mean: np.ndarray, batch_var: np.ndarray) -> None:
        self.running_mean = self.momentum * self.running_mean + (1.0 - self.momentum) * batch_mean
        self.running_var = self.momentum * self.running_var + (1.0 - self.momentum) * batch_var
        self.updates += 1


def batch_normalize(x: Tensor, state: NormState, mode: Mode) -> Tensor:
    """
    Per-feature normalization.

    train: normalizes with the batch statistics and folds them into `state`.
    eval: normalizes with the running statistics; `state` is left unchanged.

    Raises:
        BatchSizeError: Train mode with fewer than two rows.
    """
    if Mode(mode) == Mode.TRAIN:
        normalized, batch_mean, batch_var = ops.batch_norm(x, eps=NORM_EPS)
        state.update(batch_mean, batch_var)
        return normalized
    if x.data.ndim != 2 or x.shape[1] != state.running_mean.shape[0]:
        raise ShapeError(f"batch_normalize: input {x.shape} does not match {state.running_mean.shape[0]} features", shapes=(x.shape,))
    centered = ops.add_bias(x, ops.constant(-state.running_mean))
    return ops.mul_rowwise(centered, ops.constant(1.0 / np.sqrt(state.running_var + NORM_EPS)))


class BatchNorm:
    """batch_normalize followed by a learned per-feature scale (gamma) and shift (beta)."""

    def __init__(self, width: int):
        self.gamma = Tensor(np.ones(width), requires_grad=True)
        self.beta = Tensor(np.zeros(width), requires_grad=True)
        self.state = NormState.fresh(width)

    def __call__(self, x: Tensor, mode: Mode) -> Tensor:
        return ops.add_bias(ops.mul_rowwise(batch_normalize(x, self.state, mode), self.gamma), self.beta)

    def parameters(self, prefix: str) -> Iterator[Tuple[str, Tensor]]:
        yield f"{prefix}.gamma", self.gamma
        yield f"{prefix}.beta", self.beta


class ResidualBlock:
    """
    x + fc2(relu(norm(fc1(x)))), with equal input and output width.

    fc1 drops its bias when normalization is on (beta takes its place). With fc2
    all zero the block is the identity map.
    """

    def __init__(self, width: int, rng: np.random.Generator, normalization: bool = False):
        if width <= 0:
            raise ConfigError(f"residual block width must be positive, got {width}")
        self.fc1 = DenseLayer(width, width, Activation.IDENTITY, rng, weight_variance=2.0 / width, bias=not normalization)
        self.norm = BatchNorm(width) if normalization else None
        self.fc2 = DenseLayer(width, width, Activation.IDENTITY, rng, weight_variance=1.0 / width)

    def __call__(self, x: Tensor, mode: Mode) -> Tensor:
        h = self.fc1(x)
        if self.norm is not None:
            h = self.norm(h, mode)
        return ops.add(x, self.fc2(ops.relu(h)))

    def parameters(self, prefix: str) -> Iterator[Tuple[str, Tensor]]:
        yield from self.fc1.parameters(f"{prefix}.fc1")
        if self.norm is not None:
            yield from self.norm.parameters(f"{prefix}.norm")
        yield from self.fc2.parameters(f"{prefix}.fc2")

    def norm_states(self, prefix: str) -> Dict[str, NormState]:
        return {f"{prefix}.norm": self.norm.state} if self.norm is not None else {}
