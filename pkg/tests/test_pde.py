import math

import numpy as np
import pytest

from conftest import make_problem, smooth_random
from sigmak.errors import DomainError, NotAdmissible
from sigmak.geometry import GridField, TensorField, TorusGrid
from sigmak.pde import (LinearizedOperator, Problem, PsiSpec, admissible_segment_test,
                        evaluate, linearize_apply, negative_residual, residual)


def const(p, c):
    return GridField.constant(p.grid, c)


def test_residual_vanishes_at_ln2():
    p = make_problem(16)
    assert np.abs(residual(const(p, math.log(2)), p).values).max() <= 1e-14


def test_residual_vanishes_at_zero_for_t0():
    p = make_problem(16, f_spec={"shape": "sin_x_cos_y", "base": 2, "amplitude": 0.5})
    assert np.abs(residual(const(p, 0.0), p, 0.0).values).max() == 0.0


@pytest.mark.parametrize("c", [-1.0, 0.0, 0.5, 2.0])
def test_residual_of_constant(c):
    p = make_problem(8)
    np.testing.assert_allclose(residual(const(p, c), p).values, 2 - math.exp(c), atol=1e-14)


def test_residual_raises_outside_cone():
    p = make_problem(16)
    u = GridField.from_function(p.grid, lambda x, y: -3.0 * np.sin(x))
    with pytest.raises(NotAdmissible) as exc:
        residual(u, p)
    assert exc.value.index is not None and exc.value.order >= 1


def test_linearization_k1_sine():
    a = 1.5
    p = make_problem(64, k=1, s=1.0, a=a)
    h = GridField.from_function(p.grid, np.sin)
    X = p.grid.coords()[0]
    lin = linearize_apply(const(p, 0.0), h, p).values
    hx = 2 * math.pi / 64
    assert np.abs(lin - (-1 - a) * np.sin(X)).max() <= hx * hx


@pytest.mark.parametrize("sign", ["positive", "negative"])
@pytest.mark.parametrize("t", [0.0, 0.4, 1.0])
def test_linearization_matches_differences(sign, t, rng):
    p = make_problem(24, sign=sign, f_spec={"shape": "cos_sum", "base": 1.5, "amplitude": 0.3})
    u = GridField(p.grid, smooth_random(p.grid, rng, 0.1))
    h = GridField(p.grid, smooth_random(p.grid, rng, 1.0))
    eps = 1e-5
    fd = (residual(u.with_values(u.values + eps * h.values), p, t).values
          - residual(u.with_values(u.values - eps * h.values), p, t).values) / (2 * eps)
    assert np.abs(fd - linearize_apply(u, h, p, t).values).max() <= 1e-6


def test_matrix_free_operator_agrees(rng):
    p = make_problem(16, k=2)
    u = GridField(p.grid, smooth_random(p.grid, rng, 0.1))
    h = GridField(p.grid, smooth_random(p.grid, rng, 1.0))
    op = LinearizedOperator(evaluate(u.values, p, 0.7), p)
    np.testing.assert_allclose(op.apply(h.values.ravel()),
                               linearize_apply(u, h, p, 0.7).values.ravel(), atol=1e-12)
    # the centre weight from probing with a unit vector
    e = np.zeros(op.size)
    e[5] = 1.0
    assert op.apply(e)[5] == pytest.approx(op.diagonal()[5], abs=1e-9)


def test_coefficient_is_positive_definite(rng):
    p = make_problem(16, k=2, dim=3)
    u = GridField(p.grid, smooth_random(p.grid, rng, 0.1))
    for t in (0.0, 0.5, 1.0):
        st = evaluate(u.values, p, t)
        assert np.linalg.eigvalsh(st.coef).min() > 0


def test_negative_residual_examples():
    p = make_problem(16, sign="negative")
    assert np.abs(negative_residual(const(p, math.log(2)), p).values).max() <= 1e-14
    with pytest.raises(DomainError):
        negative_residual(const(p, 0.0), make_problem(16))
    # agrees with the residual of the negative-sign blend at t = 1
    u = GridField.from_function(p.grid, lambda x, y: 0.1 * np.sin(x) * np.cos(y))
    np.testing.assert_allclose(negative_residual(u, p).values, residual(u, p).values, atol=1e-13)


def test_segment_test_examples():
    p = make_problem(16)
    one = const(p, 1.0)
    assert admissible_segment_test(one, const(p, 2.0), p).passed
    far = GridField.from_function(p.grid, lambda x, y: np.exp(-3.0 * np.sin(x)))
    res = admissible_segment_test(one, far, p)
    assert not res.passed and 0.0 < res.s <= 1.0 and res.index is not None
    with pytest.raises(DomainError):
        admissible_segment_test(const(p, 0.0), one, p)


def test_problem_validation():
    g = TorusGrid((8, 8))
    S = TensorField.constant(g, np.eye(2))
    f = GridField.constant(g, 1.0)
    with pytest.raises(DomainError):
        PsiSpec(GridField.constant(g, 0.0))
    with pytest.raises(DomainError):
        PsiSpec(f, 0.0)
    with pytest.raises(DomainError):
        Problem(g, 3, S, PsiSpec(f))
    with pytest.raises(DomainError):
        Problem(g, 2, S, PsiSpec(f), "sideways")
    with pytest.raises(DomainError):
        Problem(g, 2, TensorField.constant(g, np.diag([1.0, -2.0])), PsiSpec(f))
    with pytest.raises(DomainError):
        Problem(g, 2, S, PsiSpec(GridField.constant(TorusGrid((8, 10)), 1.0)))
