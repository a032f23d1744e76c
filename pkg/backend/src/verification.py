"""
Finite-difference verification suite.

Three groups of checks, all seeded:
    primitive:<op>   every differentiable primitive against central differences
    loss:<name>      the losses, including the exact-zero gradient outside each mask
                     and agreement with the closed-form selective gradient
    model:<name>     small residual networks trained end to end through the loss

A check passes when its maximum relative error is below the tolerance; the mask
checks pass only on exact zeros.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Sequence

import numpy as np

from .autodiff import ops
from .autodiff.gradcheck import CheckReport, finite_difference_check
from .autodiff.tensor import Tape, Tensor
from .losses import (
    MaskedTarget,
    binary_cross_entropy,
    full_bce,
    selective_bce,
    selective_bce_gradient,
    softmax_cross_entropy,
)
from .nn.network import UNION_HEAD, init_network
from .nn.layers import Mode
from .schemas import HeadStrategy, LabelKind, LabelSpace, NetworkSpec, NormalizerMode

logger = logging.getLogger(__name__)

TOLERANCE = 1e-5
PRIMITIVE_STEP = 1e-5
# Smaller step for networks: fewer perturbations straddle a ReLU kink
MODEL_STEP = 1e-6
ANALYTIC_TOLERANCE = 1e-10


class SuiteSize(str, Enum):
    SMALL = "small"
    FULL = "full"


@dataclass
class SuiteCheck:
    name: str
    passed: bool
    max_relative_error: float
    detail: str = ""


@dataclass
class SuiteResult:
    size: SuiteSize
    checks: List[SuiteCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failing(self) -> List[str]:
        return [check.name for check in self.checks if not check.passed]

    @property
    def max_relative_error(self) -> float:
        return max((check.max_relative_error for check in self.checks), default=0.0)

    def add_report(self, name: str, report: CheckReport) -> None:
        worst = report.max_relative_error
        failing = report.failing()
        detail = f"failing tensors: {failing}" if failing else ""
        self.checks.append(SuiteCheck(name=name, passed=report.passed, max_relative_error=worst, detail=detail))
        logger.debug(f"{name}: max relative error {worst:.3e}")


def _weighted_sum(out: Tensor, weights: np.ndarray) -> Tensor:
    """sum(out * weights): a scalar whose upstream gradient differs per element."""
    return ops.sum(ops.mul(out, ops.constant(weights)))


def _away_from_zero(rng: np.random.Generator, shape, margin: float = 0.1) -> np.ndarray:
    values = rng.standard_normal(shape)
    return np.where(values >= 0, values + margin, values - margin)


def _primitive_cases(rng: np.random.Generator, rows: int, cols: int) -> Dict[str, tuple]:
    """op name -> (function of the parameter tensors, parameter tensors, output weights shape)."""
    a = Tensor(rng.standard_normal((rows, cols)))
    b = Tensor(rng.standard_normal((rows, cols)))
    right = Tensor(rng.standard_normal((cols, rows + 1)))
    vector = Tensor(rng.standard_normal(cols))
    kinked = Tensor(_away_from_zero(rng, (rows, cols)))
    positive = Tensor(rng.uniform(0.5, 2.0, (rows, cols)))
    return {
        "matmul": (lambda: ops.matmul(a, right), [a, right], (rows, rows + 1)),
        "transpose": (lambda: ops.transpose(a), [a], (cols, rows)),
        "add": (lambda: ops.add(a, b), [a, b], (rows, cols)),
        "sub": (lambda: ops.sub(a, b), [a, b], (rows, cols)),
        "mul": (lambda: ops.mul(a, b), [a, b], (rows, cols)),
        "relu": (lambda: ops.relu(kinked), [kinked], (rows, cols)),
        "sigmoid": (lambda: ops.sigmoid(a), [a], (rows, cols)),
        "log": (lambda: ops.log(positive), [positive], (rows, cols)),
        "add_bias": (lambda: ops.add_bias(a, vector), [a, vector], (rows, cols)),
        "mul_rowwise": (lambda: ops.mul_rowwise(a, vector), [a, vector], (rows, cols)),
        "sum": (lambda: ops.sum(a), [a], ()),
        "mean": (lambda: ops.mean(a), [a], ()),
        "batch_norm": (lambda: ops.batch_norm(a)[0], [a], (rows, cols)),
    }


def check_primitives(result: SuiteResult, rng: np.random.Generator, rows: int, cols: int) -> None:
    for name, (build, params, out_shape) in _primitive_cases(rng, rows, cols).items():
        weights = rng.standard_normal(out_shape)
        report = finite_difference_check(lambda: _weighted_sum(build(), weights), params, h=PRIMITIVE_STEP, tol=TOLERANCE)
        result.add_report(f"primitive:{name}", report)


def random_masked_targets(rng: np.random.Generator, rows: int, widths: Sequence[int]) -> List[MaskedTarget]:
    """Targets over a union of consecutive spaces; each row belongs to one randomly chosen space."""
    total = sum(widths)
    offsets = np.cumsum([0] + list(widths))
    targets = []
    for _ in range(rows):
        k = int(rng.integers(len(widths)))
        mask = np.zeros(total, dtype=bool)
        mask[offsets[k]:offsets[k + 1]] = True
        y = np.zeros(total)
        y[mask] = rng.integers(0, 2, size=widths[k])
        targets.append(MaskedTarget(targets=y, mask=mask, dataset_id=f"space{k}"))
    return targets


def check_losses(result: SuiteResult, rng: np.random.Generator, instances: int) -> None:
    for i in range(instances):
        widths = [int(w) for w in rng.integers(1, 6, size=int(rng.integers(1, 4)))]
        rows = int(rng.integers(1, 6))
        total = sum(widths)
        logits = Tensor(rng.standard_normal((rows, total)) * 3.0)
        targets = random_masked_targets(rng, rows, widths)

        for mode in NormalizerMode:
            report = finite_difference_check(
                lambda: selective_bce(logits, targets, normalizer=mode).tensor, [logits], h=PRIMITIVE_STEP, tol=TOLERANCE,
            )
            result.add_report(f"loss:selective_bce[{mode.value}]#{i}", report)
            check_mask_exactness(result, logits, targets, mode, i)

        report = finite_difference_check(lambda: full_bce(logits, targets).tensor, [logits], h=PRIMITIVE_STEP, tol=TOLERANCE)
        result.add_report(f"loss:full_bce#{i}", report)

        labels = rng.integers(0, 2, size=(rows, total)).astype(np.float64)
        report = finite_difference_check(lambda: binary_cross_entropy(logits, labels).tensor, [logits], h=PRIMITIVE_STEP, tol=TOLERANCE)
        result.add_report(f"loss:binary_cross_entropy#{i}", report)

        onehot = np.eye(total)[rng.integers(0, total, size=rows)]
        report = finite_difference_check(lambda: softmax_cross_entropy(logits, onehot).tensor, [logits], h=PRIMITIVE_STEP, tol=TOLERANCE)
        result.add_report(f"loss:softmax_cross_entropy#{i}", report)


def check_mask_exactness(result: SuiteResult, logits: Tensor, targets: List[MaskedTarget], mode: NormalizerMode, index: int) -> None:
    """Autodiff and central differences must both be exactly 0 outside every mask."""
    mask = np.stack([t.mask for t in targets])
    variable = Tensor(logits.data.copy(), requires_grad=True)
    with Tape() as tape:
        loss = selective_bce(variable, targets, normalizer=mode)
    tape.backward(loss.tensor)
    analytic = variable.grad
    outside = analytic[~mask]

    numeric_outside = []
    for row, col in np.argwhere(~mask):
        original = variable.data[row, col]
        variable.data[row, col] = original + PRIMITIVE_STEP
        plus = selective_bce(variable, targets, normalizer=mode).value
        variable.data[row, col] = original - PRIMITIVE_STEP
        minus = selective_bce(variable, targets, normalizer=mode).value
        variable.data[row, col] = original
        numeric_outside.append(plus - minus)

    exact = bool(np.all(outside == 0.0)) and all(d == 0.0 for d in numeric_outside)
    closed_form = selective_bce_gradient(logits.data, targets, normalizer=mode)
    formula_error = float(np.max(np.abs(analytic - closed_form))) if analytic.size else 0.0
    result.checks.append(SuiteCheck(
        name=f"loss:mask_zero[{mode.value}]#{index}",
        passed=exact,
        max_relative_error=0.0 if exact else float("inf"),
        detail=f"{outside.size} masked-out positions, all exactly zero" if exact else "nonzero gradient outside the mask",
    ))
    result.checks.append(SuiteCheck(
        name=f"loss:closed_form_gradient[{mode.value}]#{index}",
        passed=formula_error < ANALYTIC_TOLERANCE,
        max_relative_error=formula_error,
    ))


def _model_check(
    result: SuiteResult,
    name: str,
    spec: NetworkSpec,
    rng: np.random.Generator,
    rows: int,
    loss: Callable,
) -> None:
    net = init_network(spec)
    x = rng.standard_normal((rows, spec.input_dim))
    named = net.parameters()
    report = finite_difference_check(
        lambda: loss(net, x), [t for _, t in named], h=MODEL_STEP, tol=TOLERANCE, names=[n for n, _ in named],
    )
    result.add_report(f"model:{name}", report)


def _tiny_spaces() -> List[LabelSpace]:
    return [
        LabelSpace(name="emotion", classes=["Happy", "Sad"], kind=LabelKind.CATEGORICAL_EXCLUSIVE),
        LabelSpace(name="au", classes=["AU6"], kind=LabelKind.MULTILABEL_BINARY),
    ]


def check_models(result: SuiteResult, rng: np.random.Generator, size: SuiteSize) -> None:
    spaces = _tiny_spaces()
    rows = 5
    targets = random_masked_targets(rng, rows, [space.size for space in spaces])

    def selective(net, x):
        return selective_bce(net.forward(x, mode=Mode.TRAIN)[UNION_HEAD], targets).tensor

    # 4 -> 6 trunk with 2 blocks and 3 union outputs: 219 parameters
    small = NetworkSpec(input_dim=4, width=6, blocks=2, head_strategy=HeadStrategy.SHARED_SELECTIVE, label_spaces=spaces, seed=11)
    _model_check(result, "sjmt-2block", small, rng, rows, selective)
    if size == SuiteSize.SMALL:
        return

    normalized = small.model_copy(update={"normalization": True, "seed": 12})
    _model_check(result, "sjmt-2block-batchnorm", normalized, rng, rows, selective)

    onehot = np.eye(2)[rng.integers(0, 2, size=rows)]
    au_labels = rng.integers(0, 2, size=(rows, 1)).astype(np.float64)

    def per_head(net, x):
        outputs = net.forward(x, mode=Mode.TRAIN)
        emotion = softmax_cross_entropy(outputs["emotion"], onehot).tensor
        au = binary_cross_entropy(outputs["au"], au_labels).tensor
        return ops.add(emotion, au)

    multi = NetworkSpec(input_dim=5, width=8, blocks=3, head_strategy=HeadStrategy.MULTI_HEAD, label_spaces=spaces, seed=13)
    _model_check(result, "classical_mt-3block", multi, rng, rows, per_head)


def run_gradcheck_suite(size: SuiteSize = SuiteSize.SMALL, seed: int = 0) -> SuiteResult:
    """Runs every check of the suite and returns the collected results."""
    size = SuiteSize(size)
    rng = np.random.default_rng(seed)
    result = SuiteResult(size=size)
    rows, cols = (3, 4) if size == SuiteSize.SMALL else (6, 7)
    check_primitives(result, rng, rows, cols)
    check_losses(result, rng, instances=3 if size == SuiteSize.SMALL else 20)
    check_models(result, rng, size)
    logger.info(
        f"Gradient check ({size.value}): {len(result.checks)} checks, {len(result.failing)} failing, "
        f"max relative error {result.max_relative_error:.3e}"
    )
    return result
