import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from ..exceptions import ContractError, DeterminismError
from .tensor import Tape, Tensor

logger = logging.getLogger(__name__)

MIN_STEP = 1e-7
MAX_STEP = 1e-3
# Gradients smaller than this are compared in absolute terms
DENOMINATOR_FLOOR = 1e-3


@dataclass
class ParameterCheck:
    """Comparison of analytic and central-difference gradients for one parameter tensor."""
    name: str
    max_relative_error: float
    max_absolute_error: float
    analytic: np.ndarray = field(repr=False)
    numeric: np.ndarray = field(repr=False)
    passed: bool = True


@dataclass
class CheckReport:
    checks: List[ParameterCheck]
    tol: float
    step: float

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def max_relative_error(self) -> float:
        return max((check.max_relative_error for check in self.checks), default=0.0)

    def failing(self) -> List[str]:
        return [check.name for check in self.checks if not check.passed]


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = DENOMINATOR_FLOOR) -> np.ndarray:
    """|a - n| / max(|a|, |n|, floor), elementwise."""
    denominator = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return np.abs(analytic - numeric) / denominator


def _evaluate(f: Callable[[], Tensor]) -> float:
    return f().item()


def finite_difference_check(
    f: Callable[[], Tensor],
    params: Sequence[Tensor],
    h: float = 1e-5,
    tol: float = 1e-5,
    names: Optional[Sequence[str]] = None,
) -> CheckReport:
    """
    Compares autodiff gradients of a scalar function with central differences.

    `f` takes no arguments and rebuilds its output from the current values of
    `params`, so perturbing a parameter in place changes what it returns.

    Args:
        f: Deterministic scalar function of the parameters.
        params: Tensors to differentiate with respect to. Their data is restored after each perturbation.
        h: Central-difference step, in [1e-7, 1e-3].
        tol: Maximum accepted relative error. The denominator is floored at
            DENOMINATOR_FLOOR, so entries where both gradients are below the floor
            are held to an absolute error of tol * DENOMINATOR_FLOOR instead.
        names: Optional display names, one per parameter.

    Returns:
        A CheckReport with one ParameterCheck per tensor.

    Raises:
        ContractError: If h is outside the accepted range.
        DeterminismError: If two baseline evaluations of f disagree.
    """
    if not MIN_STEP <= h <= MAX_STEP:
        raise ContractError(f"finite-difference step h={h} outside [{MIN_STEP}, {MAX_STEP}]")
    names = list(names) if names is not None else [p.name or f"param{i}" for i, p in enumerate(params)]

    baseline = _evaluate(f)
    repeat = _evaluate(f)
    if baseline != repeat:
        raise DeterminismError(f"Function under check is not deterministic: {baseline!r} != {repeat!r}")

    saved_flags = [p.requires_grad for p in params]
    for p in params:
        p.requires_grad = True
        p.zero_grad()
    try:
        with Tape() as tape:
            out = f()
        tape.backward(out)
        analytic_grads = [p.grad.copy() if p.grad is not None else np.zeros_like(p.data) for p in params]
    finally:
        for p, flag in zip(params, saved_flags):
            p.requires_grad = flag
            p.zero_grad()

    checks: List[ParameterCheck] = []
    for name, p, analytic in zip(names, params, analytic_grads):
        numeric = np.zeros_like(p.data)
        for index in np.ndindex(p.data.shape):
            original = p.data[index]
            p.data[index] = original + h
            plus = _evaluate(f)
            p.data[index] = original - h
            minus = _evaluate(f)
            p.data[index] = original
            numeric[index] = (plus - minus) / (2.0 * h)
        errors = relative_error(analytic, numeric)
        max_rel = float(errors.max()) if errors.size else 0.0
        max_abs = float(np.abs(analytic - numeric).max()) if errors.size else 0.0
        checks.append(ParameterCheck(
            name=name,
            max_relative_error=max_rel,
            max_absolute_error=max_abs,
            analytic=analytic,
            numeric=numeric,
            passed=max_rel < tol,
        ))
        logger.debug(f"gradcheck {name}: max relative error {max_rel:.3e}")

    return CheckReport(checks=checks, tol=tol, step=h)
