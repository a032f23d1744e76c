import math

import numpy as np
import pytest
from scipy.special import expit

from backend.src.autodiff.gradcheck import finite_difference_check
from backend.src.autodiff.tensor import Tape, Tensor
from backend.src.exceptions import ContractError, ShapeError
from backend.src.losses import (
    MaskedTarget,
    binary_cross_entropy,
    full_bce,
    selective_bce,
    selective_bce_gradient,
    selective_bce_reference,
    sigmoid_probabilities,
)
from backend.src.schemas import NormalizerMode
from backend.src.verification import random_masked_targets


def _random_instance(rng: np.random.Generator, max_width: int = 32):
    widths = []
    while not widths or (sum(widths) < max_width and rng.random() < 0.6):
        widths.append(int(rng.integers(1, 8)))
    while sum(widths) > max_width:
        widths.pop()
    rows = int(rng.integers(1, 5))
    logits = rng.standard_normal((rows, sum(widths))) * 3.0
    return logits, random_masked_targets(rng, rows, widths)


def _gradient(logits: np.ndarray, targets, **kwargs) -> np.ndarray:
    variable = Tensor(logits.copy(), requires_grad=True)
    with Tape() as tape:
        loss = selective_bce(variable, targets, **kwargs)
    tape.backward(loss.tensor)
    return variable.grad


def test_sigmoid_probabilities_basics(rng):
    assert sigmoid_probabilities(Tensor([[0.0]])).data[0, 0] == 0.5
    extreme = sigmoid_probabilities(Tensor([[-1000.0, 1000.0]])).data
    assert np.all(np.isfinite(extreme))
    assert np.all((extreme >= 0.0) & (extreme <= 1.0))
    pairs = np.sort(rng.uniform(-20.0, 20.0, size=(200, 2)), axis=1)
    pairs = pairs[pairs[:, 0] < pairs[:, 1]]
    probabilities = sigmoid_probabilities(Tensor(pairs)).data
    assert np.all(probabilities[:, 0] < probabilities[:, 1])


def test_zero_logits_give_ln2():
    target = MaskedTarget(targets=[0, 1, 0, 0, 0], mask=[False, True, True, True, False], dataset_id="au")
    loss = selective_bce(Tensor(np.zeros((1, 5))), [target])
    assert loss.value == pytest.approx(math.log(2.0), abs=1e-12)
    assert loss.normalizer_used == (3,)


def test_confident_correct_logit():
    target = MaskedTarget(targets=[1.0, 0.0], mask=[True, False], dataset_id="emotion")
    loss = selective_bce(Tensor([[20.0, -3.0]]), [target])
    assert loss.value == pytest.approx(2.061e-9, rel=1e-3)


def test_union_normalizer_divides_by_union_width():
    target = MaskedTarget(targets=[1.0, 0.0, 0.0, 0.0], mask=[True, True, False, False], dataset_id="emotion")
    per_dataset = selective_bce(Tensor(np.zeros((1, 4))), [target])
    union = selective_bce(Tensor(np.zeros((1, 4))), [target], normalizer=NormalizerMode.UNION)
    assert union.normalizer_used == (4,)
    assert union.value == pytest.approx(per_dataset.value / 2.0, abs=1e-15)


@pytest.mark.parametrize("normalizer", list(NormalizerMode))
def test_matches_scalar_oracle_on_1000_instances(normalizer):
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        logits, targets = _random_instance(rng)
        fused = selective_bce(Tensor(logits), targets, normalizer=normalizer).value
        oracle = selective_bce_reference(logits, targets, normalizer=normalizer)
        assert fused == pytest.approx(oracle, abs=1e-12)


def test_gradient_is_exactly_zero_outside_every_mask():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        logits, targets = _random_instance(rng)
        grad = _gradient(logits, targets)
        mask = np.stack([t.mask for t in targets])
        y = np.stack([t.targets for t in targets])
        n = mask.sum(axis=1, keepdims=True)
        assert np.all(grad[~mask] == 0.0)
        expected = (expit(logits) - y) / n / logits.shape[0]
        assert np.max(np.abs(grad[mask] - expected[mask])) < 1e-10


def test_closed_form_gradient_agrees_with_autodiff(rng):
    logits, targets = _random_instance(rng)
    assert np.max(np.abs(_gradient(logits, targets) - selective_bce_gradient(logits, targets))) < 1e-12


def test_finite_differences_on_random_instances(rng):
    for _ in range(50):
        logits, targets = _random_instance(rng, max_width=10)
        variable = Tensor(logits)
        report = finite_difference_check(lambda: selective_bce(variable, targets).tensor, [variable])
        assert report.passed
        mask = np.stack([t.mask for t in targets])
        assert np.all(report.checks[0].numeric[~mask] == 0.0)


def test_full_mask_matches_full_bce(rng):
    for _ in range(100):
        rows, width = int(rng.integers(1, 6)), int(rng.integers(1, 33))
        logits = rng.standard_normal((rows, width)) * 3.0
        targets = [
            MaskedTarget(targets=rng.integers(0, 2, width), mask=np.ones(width, dtype=bool), dataset_id="all")
            for _ in range(rows)
        ]
        selective = selective_bce(Tensor(logits), targets).value
        assert full_bce(Tensor(logits), targets).value == pytest.approx(selective, abs=1e-12)


def test_full_bce_pushes_unlabeled_au_logits_down():
    """A Happy sample with AU positions unlabeled: full BCE reads them as 0, selective ignores them."""
    emotion_width, au_width = 7, 10
    targets = np.zeros(emotion_width + au_width)
    targets[3] = 1.0  # Happy
    mask = np.zeros(emotion_width + au_width, dtype=bool)
    mask[:emotion_width] = True
    sample = [MaskedTarget(targets=targets, mask=mask, dataset_id="emotion")]
    logits = np.zeros((1, emotion_width + au_width))

    variable = Tensor(logits.copy(), requires_grad=True)
    with Tape() as tape:
        loss = full_bce(variable, sample)
    tape.backward(loss.tensor)
    au_gradient = variable.grad[0, emotion_width:]
    # Positive gradient: a descent step lowers every AU logit, AU6 and AU12 included
    assert np.all(au_gradient > 0.0)
    assert np.all(_gradient(logits, sample)[0, emotion_width:] == 0.0)


def test_binary_cross_entropy_over_plain_targets():
    loss = binary_cross_entropy(Tensor(np.zeros((2, 3))), np.array([[0, 1, 0], [1, 1, 1]]))
    assert loss.value == pytest.approx(math.log(2.0), abs=1e-12)
    with pytest.raises(ShapeError):
        binary_cross_entropy(Tensor(np.zeros((2, 3))), np.zeros((2, 4)))


def test_contract_violations():
    logits = Tensor(np.zeros((1, 3)))
    with pytest.raises(ContractError, match="empty mask"):
        selective_bce(logits, [MaskedTarget(targets=[0, 0, 0], mask=[False, False, False], dataset_id="au")])
    with pytest.raises(ContractError, match="outside the dataset mask"):
        selective_bce(logits, [MaskedTarget(targets=[0, 0, 1], mask=[True, True, False], dataset_id="emotion")])
    with pytest.raises(ContractError, match="do not match"):
        selective_bce(logits, [MaskedTarget(targets=[0, 0], mask=[True, True], dataset_id="emotion")])
    with pytest.raises(ContractError):
        selective_bce(Tensor(np.zeros((2, 3))), [MaskedTarget(targets=[0, 0, 0], mask=[True, True, True], dataset_id="au")])
