import numpy as np
import pytest

from backend.src.autodiff import ops
from backend.src.autodiff.tensor import Tape, Tensor
from backend.src.exceptions import ContractError, DivergenceError
from backend.src.training import sgd_step


def test_single_update():
    p = Tensor(np.array([1.0]), requires_grad=True)
    sgd_step([p], [np.array([2.0])], lr=0.1)
    assert p.data[0] == pytest.approx(0.8, abs=1e-15)
    assert p.grad is None


def test_zero_rate_and_missing_gradient_leave_parameters():
    p = Tensor(np.array([1.0, -2.0]), requires_grad=True)
    sgd_step([p], [np.array([5.0, 5.0])], lr=0.0)
    sgd_step([p], [None], lr=0.5)
    assert p.data.tolist() == [1.0, -2.0]


def test_quadratic_bowl_converges():
    p = Tensor(np.array([3.0, -1.5]), requires_grad=True)
    for _ in range(50):
        with Tape() as tape:
            loss = ops.sum(ops.mul(p, p))
        tape.backward(loss)
        sgd_step([p], lr=0.4)
    assert np.all(np.abs(p.data) < 1e-4)


def test_non_finite_gradient_aborts_without_updating():
    a = Tensor(np.array([1.0]), requires_grad=True)
    b = Tensor(np.array([1.0]), requires_grad=True, name="head.W")
    with pytest.raises(DivergenceError, match="head.W") as excinfo:
        sgd_step([a, b], [np.array([1.0]), np.array([np.nan])], lr=0.1, step=17)
    assert excinfo.value.step == 17
    assert a.data[0] == 1.0 and b.data[0] == 1.0


def test_gradient_count_must_match():
    with pytest.raises(ContractError):
        sgd_step([Tensor(np.ones(2), requires_grad=True)], [], lr=0.1)
