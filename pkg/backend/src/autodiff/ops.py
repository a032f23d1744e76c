"""
Differentiable primitives.

Every primitive computes its output with numpy, then hands it to `record`, which
puts it on the active tape (if any). The matching backward rule is registered
under the same name in BACKWARD_RULES.
"""
from typing import Optional, Tuple

import numpy as np
from scipy.special import expit

from ..exceptions import BatchSizeError, ContractError, DomainError, ShapeError
from .tensor import Tensor, TapeEntry, backward_rule, record

ELEMENTWISE_OPS = ("add", "sub", "mul", "relu", "sigmoid", "log")


def _as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def _require_same_shape(op: str, a: Tensor, b: Tensor) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{op}: operand shapes differ: {a.shape} vs {b.shape}", shapes=(a.shape, b.shape))


def _require_ndim(op: str, tensor: Tensor, ndim: int) -> None:
    if tensor.data.ndim != ndim:
        raise ShapeError(f"{op}: expected a {ndim}-d tensor, got shape {tensor.shape}", shapes=(tensor.shape,))


# --- Linear algebra --- #

def matmul(a: Tensor, b: Tensor) -> Tensor:
    """[m x k] @ [k x n] -> [m x n]."""
    a, b = _as_tensor(a), _as_tensor(b)
    _require_ndim("matmul", a, 2)
    _require_ndim("matmul", b, 2)
    if a.shape[1] != b.shape[0]:
        raise ShapeError(
            f"matmul: inner dimensions differ for shapes {a.shape} and {b.shape}",
            shapes=(a.shape, b.shape),
        )
    return record("matmul", (a, b), Tensor._wrap(a.data @ b.data))


@backward_rule("matmul")
def _matmul_backward(entry: TapeEntry, grad: np.ndarray):
    a, b = entry.inputs
    return grad @ b.data.T, a.data.T @ grad


def transpose(a: Tensor) -> Tensor:
    a = _as_tensor(a)
    _require_ndim("transpose", a, 2)
    return record("transpose", (a,), Tensor._wrap(a.data.T.copy()))


@backward_rule("transpose")
def _transpose_backward(entry: TapeEntry, grad: np.ndarray):
    return (grad.T,)


# --- Elementwise --- #

def add(a: Tensor, b: Tensor) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _require_same_shape("add", a, b)
    return record("add", (a, b), Tensor._wrap(a.data + b.data))


@backward_rule("add")
def _add_backward(entry: TapeEntry, grad: np.ndarray):
    return grad, grad


def sub(a: Tensor, b: Tensor) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _require_same_shape("sub", a, b)
    return record("sub", (a, b), Tensor._wrap(a.data - b.data))


@backward_rule("sub")
def _sub_backward(entry: TapeEntry, grad: np.ndarray):
    return grad, -grad


def mul(a: Tensor, b: Tensor) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _require_same_shape("mul", a, b)
    return record("mul", (a, b), Tensor._wrap(a.data * b.data))


@backward_rule("mul")
def _mul_backward(entry: TapeEntry, grad: np.ndarray):
    a, b = entry.inputs
    return grad * b.data, grad * a.data


def relu(a: Tensor) -> Tensor:
    """max(x, 0). The subgradient at exactly 0 is 0."""
    a = _as_tensor(a)
    return record("relu", (a,), Tensor._wrap(np.maximum(a.data, 0.0)))


@backward_rule("relu")
def _relu_backward(entry: TapeEntry, grad: np.ndarray):
    (a,) = entry.inputs
    return (np.where(a.data > 0.0, grad, 0.0),)


def sigmoid(a: Tensor) -> Tensor:
    """1 / (1 + exp(-x)), evaluated without overflow for any finite x."""
    a = _as_tensor(a)
    out = Tensor._wrap(expit(a.data))
    return record("sigmoid", (a,), out, probabilities=out.data)


@backward_rule("sigmoid")
def _sigmoid_backward(entry: TapeEntry, grad: np.ndarray):
    s = entry.context["probabilities"]
    return (grad * s * (1.0 - s),)


def log(a: Tensor) -> Tensor:
    """Natural log. Inputs must be strictly positive; losses use their own fused forms."""
    a = _as_tensor(a)
    if np.any(a.data <= 0.0):
        raise DomainError(f"log: input holds {int(np.sum(a.data <= 0.0))} non-positive value(s)")
    return record("log", (a,), Tensor._wrap(np.log(a.data)))


@backward_rule("log")
def _log_backward(entry: TapeEntry, grad: np.ndarray):
    (a,) = entry.inputs
    return (grad / a.data,)


def elementwise(op: str, *args: Tensor) -> Tensor:
    """Dispatches to one of the elementwise primitives by name."""
    functions = {"add": add, "sub": sub, "mul": mul, "relu": relu, "sigmoid": sigmoid, "log": log}
    if op not in functions:
        raise ContractError(f"Unknown elementwise op '{op}'. Expected one of {ELEMENTWISE_OPS}")
    return functions[op](*args)


# --- Row broadcasting (bias, per-feature scale) --- #

def add_bias(x: Tensor, bias: Tensor) -> Tensor:
    """Adds a [d] vector to every row of a [B x d] matrix."""
    x, bias = _as_tensor(x), _as_tensor(bias)
    _require_ndim("add_bias", x, 2)
    if bias.shape != (x.shape[1],):
        raise ShapeError(f"add_bias: bias shape {bias.shape} does not match rows of {x.shape}", shapes=(x.shape, bias.shape))
    return record("add_bias", (x, bias), Tensor._wrap(x.data + bias.data))


@backward_rule("add_bias")
def _add_bias_backward(entry: TapeEntry, grad: np.ndarray):
    return grad, grad.sum(axis=0)


def mul_rowwise(x: Tensor, scale: Tensor) -> Tensor:
    """Multiplies every row of a [B x d] matrix by a [d] vector."""
    x, scale = _as_tensor(x), _as_tensor(scale)
    _require_ndim("mul_rowwise", x, 2)
    if scale.shape != (x.shape[1],):
        raise ShapeError(f"mul_rowwise: scale shape {scale.shape} does not match rows of {x.shape}", shapes=(x.shape, scale.shape))
    return record("mul_rowwise", (x, scale), Tensor._wrap(x.data * scale.data))


@backward_rule("mul_rowwise")
def _mul_rowwise_backward(entry: TapeEntry, grad: np.ndarray):
    x, scale = entry.inputs
    return grad * scale.data, (grad * x.data).sum(axis=0)


# --- Reductions --- #

def sum(a: Tensor) -> Tensor:  # noqa: A001 - mirrors numpy naming
    a = _as_tensor(a)
    return record("sum", (a,), Tensor._wrap(np.sum(a.data)))


@backward_rule("sum")
def _sum_backward(entry: TapeEntry, grad: np.ndarray):
    (a,) = entry.inputs
    return (np.full(a.shape, float(grad)),)


def mean(a: Tensor) -> Tensor:
    a = _as_tensor(a)
    return record("mean", (a,), Tensor._wrap(np.mean(a.data)))


@backward_rule("mean")
def _mean_backward(entry: TapeEntry, grad: np.ndarray):
    (a,) = entry.inputs
    return (np.full(a.shape, float(grad) / a.size),)


# --- Normalization --- #

def batch_norm(x: Tensor, eps: float = 1e-5) -> Tuple[Tensor, np.ndarray, np.ndarray]:
    """
    Normalizes each column of a [B x d] batch to mean 0 and variance 1.

    Uses the biased batch variance. Returns the normalized tensor together with the
    batch mean and the unbiased batch variance, which callers use for running statistics.

    Raises:
        BatchSizeError: If the batch has fewer than two rows.
    """
    x = _as_tensor(x)
    _require_ndim("batch_norm", x, 2)
    rows = x.shape[0]
    if rows < 2:
        raise BatchSizeError(f"batch_norm: train mode needs at least 2 rows, got {rows}")
    batch_mean = x.data.mean(axis=0)
    centered = x.data - batch_mean
    variance = (centered * centered).mean(axis=0)
    inv_std = 1.0 / np.sqrt(variance + eps)
    normalized = centered * inv_std
    out = record("batch_norm", (x,), Tensor._wrap(normalized), normalized=normalized, inv_std=inv_std)
    unbiased_variance = variance * rows / (rows - 1)
    return out, batch_mean, unbiased_variance


@backward_rule("batch_norm")
def _batch_norm_backward(entry: TapeEntry, grad: np.ndarray):
    normalized = entry.context["normalized"]
    inv_std = entry.context["inv_std"]
    rows = grad.shape[0]
    grad_sum = grad.sum(axis=0)
    grad_dot = (grad * normalized).sum(axis=0)
    return (inv_std / rows * (rows * grad - grad_sum - normalized * grad_dot),)


def constant(value, name: Optional[str] = None) -> Tensor:
    """A tensor that never requires gradients."""
    return Tensor(value, requires_grad=False, name=name)
