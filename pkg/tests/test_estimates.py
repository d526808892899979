import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_problem
from sigmak import estimates
from sigmak.errors import DomainError, HarnackInfeasible
from sigmak.geometry import GridField, TensorField, TorusGrid

EPS = estimates.MARGIN


def test_c0_identity_three_dims():
    p = make_problem(8, k=2, s=1.0, dim=3)
    b = estimates.c0_bounds(p)
    assert b.lower == pytest.approx(math.log(math.sqrt(3)) - EPS, abs=1e-14)
    assert b.upper == pytest.approx(math.log(math.sqrt(3)) + EPS, abs=1e-14)


def test_c0_constant_case():
    b = estimates.c0_bounds(make_problem(8))
    assert b.lower < math.log(2) < b.upper and b.upper - b.lower == pytest.approx(2 * EPS)


def test_c0_perturbed_rhs():
    p = make_problem(16, f_spec={"shape": "sin_x", "base": 1, "amplitude": 0.2})
    b = estimates.c0_bounds(p)
    assert b.lower == pytest.approx(math.log(2 / 1.2) - EPS, abs=1e-12)
    assert b.upper == pytest.approx(math.log(2 / 0.8) + EPS, abs=1e-12)


@pytest.mark.parametrize("t", [0.0, 0.3, 0.7, 1.0])
def test_c0_blend_brackets_zero_and_target(t):
    p = make_problem(16, f_spec={"shape": "sin_x", "base": 1, "amplitude": 0.2})
    b = estimates.c0_bounds(p, t)
    b1 = estimates.c0_bounds(p, 1.0)
    assert min(0.0, b1.lower) <= b.lower + EPS and b.upper - EPS <= max(0.0, b1.upper) + 1e-15


def test_c0_reversed_orientation():
    p = make_problem(8, s=0.2, a=-2.0)
    b = estimates.c0_bounds(p)
    assert b.reversed
    u = GridField.constant(p.grid, -0.5 * math.log(0.2))
    assert estimates.verify_c0(u, b).passed


def test_verify_c0_detects_shift():
    p = make_problem(8)
    b = estimates.c0_bounds(p)
    assert estimates.verify_c0(GridField.constant(p.grid, math.log(2)), b).passed
    rep = estimates.verify_c0(GridField.constant(p.grid, math.log(2) + 1e-3), b)
    assert not rep.passed and rep.upper_slack < 0
    assert rep.to_record()["check"] == "c0_bounds"


def test_phi_example():
    pc = estimates.phi_constants(estimates.C0Bounds(-1.0, 1.0))
    assert pc.p == 4 and pc.c2 == pytest.approx(1.375)
    assert pc.c1 == pytest.approx(1.0 / (16 * 2.375 ** 4))
    assert pc.check()[0]


def test_degenerate_interval():
    with pytest.raises(DomainError):
        estimates.C0Bounds(1.0, 1.0)
    with pytest.raises(DomainError):
        estimates.phi_constants(estimates.C0Bounds(0.0, 1.0), "sideways")


@settings(max_examples=40, deadline=None)
@given(st.floats(-20, 20), st.floats(1e-6, 30), st.sampled_from(["positive", "negative"]))
def test_phi_inequalities_hold(lo, width, mode):
    pc = estimates.phi_constants(estimates.C0Bounds(lo, lo + width), mode)
    ok, first, second = pc.check(2000)
    assert ok and first > 0 and second > 0


def test_harnack_gap_values():
    g = TorusGrid((8, 8))
    S = TensorField.constant(g, np.eye(2))
    gap = estimates.harnack_gap(S, 1.0)
    assert gap == pytest.approx(2 * math.log(math.cos(1 / math.sqrt(2))), abs=1e-12)
    assert gap == pytest.approx(-0.54823, abs=1e-5)
    assert abs(estimates.harnack_gap(S, 1e-6)) < 1e-11
    with pytest.raises(HarnackInfeasible):
        estimates.harnack_gap(S, math.pi / math.sqrt(2))
    assert estimates.harnack_gap(S, math.pi / math.sqrt(2) * (1 - 1e-9)) < -30


def test_verify_harnack_examples():
    g = TorusGrid((8, 8), (2.0, 2.0))
    S = TensorField.constant(g, np.eye(2))
    D = g.diameter
    flat = estimates.verify_harnack(GridField.constant(g, 0.3), S, D)
    assert flat.passed and flat.slack == pytest.approx(-flat.gap)
    wild = estimates.verify_harnack(GridField.from_function(g, lambda x, y: 5 * np.sin(x)), S, D)
    assert not wild.passed and wild.note.startswith("not a solution")
    big = TorusGrid((8, 8))
    rep = estimates.verify_harnack(GridField.constant(big, 0.0),
                                   TensorField.constant(big, np.eye(2)), big.diameter)
    assert not rep.feasible and not rep.passed


def test_v_convexity_examples():
    g = TorusGrid((16, 16))
    S = TensorField.constant(g, 0.2 * np.eye(2))
    assert estimates.verify_v_convexity(GridField.constant(g, 1.0), S).passed
    rep = estimates.verify_v_convexity(
        GridField.from_function(g, lambda x, y: 2 * np.cos(x)), S)
    assert not rep.passed and rep.failures > 0 and rep.first_failure


def test_mean_bounds_example():
    g = TorusGrid((8, 8))
    S = TensorField.constant(g, np.eye(2))
    one = GridField.constant(g, 1.0)
    assert estimates.verify_mean_bounds(GridField.constant(g, 0.0), S, one, 0.0).passed
    assert not estimates.verify_mean_bounds(GridField.constant(g, 0.0), S, one, 0.5).passed


def test_diagnostics_constant():
    p = make_problem(8, k=2, s=2.0)
    d = estimates.diagnostics(GridField.constant(p.grid, 0.7), p)
    assert d == {"grad_sup": 0.0, "hess_eig_max": 2.0, "sigma_km1_max": 4.0}
    d1 = estimates.diagnostics(GridField.constant(p.grid, 0.0), make_problem(8, k=1))
    assert d1["sigma_km1_max"] == 1.0


def test_harnack_comparison_profiles():
    passed, worst = estimates.harnack_ode_check(50)
    assert passed == 50 and worst > 0


def test_model_rows():
    rows = estimates.model_rows()
    assert len(rows) == 15
    assert all(abs(r["invariant"] - r["expected"]) <= 1e-12 for r in rows)
    assert not any(r["feasible"] for r in rows if r["model"].startswith("Sphere"))
    assert all(r["feasible"] for r in rows if not r["model"].startswith("Sphere"))
