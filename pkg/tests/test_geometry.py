import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sigmak.catalog import SHAPES, scalar_derivatives, shape_derivatives, tensor_field
from sigmak.errors import ConfigError, DomainError
from sigmak.fieldio import read_field, write_field
from sigmak.geometry import (GridField, ModelGeometry, TensorField, TorusGrid,
                             augmented_hessian, christoffel_hessian, conformal_hessian,
                             gradient, hessian, model_schouten)
from sigmak.symfunc import evaluate_batch


def field(grid, fn):
    return GridField.from_function(grid, fn)


@pytest.mark.parametrize("sizes, lengths", [((6, 8), None), ((8, 9), None), ((8,), None),
                                            ((8, 8), (1.0, -1.0)), ((8, 8, 8, 8), None)])
def test_grid_validation(sizes, lengths):
    with pytest.raises(DomainError):
        TorusGrid(sizes, lengths)


def test_grid_geometry():
    g = TorusGrid((16, 8), (2.0, 4.0))
    assert g.spacing == (0.125, 0.5)
    assert g.volume == 8.0
    assert g.npoints == 128
    assert g.diameter == pytest.approx(0.5 * math.sqrt(20.0))
    assert TorusGrid((8, 8)).lengths == (2 * math.pi, 2 * math.pi)


def test_fields_are_immutable_and_finite():
    g = TorusGrid((8, 8))
    u = GridField.constant(g, 1.0)
    with pytest.raises(ValueError):
        u.values[0, 0] = 2.0
    with pytest.raises(DomainError):
        GridField(g, np.full((8, 8), np.nan))
    with pytest.raises(DomainError):
        TensorField(g, np.broadcast_to(np.array([[1.0, 2.0], [0.0, 1.0]]), (8, 8, 2, 2)))


def test_constants_have_zero_derivatives():
    g = TorusGrid((8, 10))
    u = GridField.constant(g, 3.0)
    assert all(np.all(c.values == 0) for c in gradient(u))
    assert np.all(hessian(u).values == 0)


@pytest.mark.parametrize("N", [64, 128])
def test_gradient_of_sine(N):
    g = TorusGrid((N, N))
    X, Y = g.coords()
    gx, gy = gradient(GridField(g, np.sin(X)))
    h = 2 * math.pi / N
    assert np.abs(gx.values - np.cos(X)).max() <= h * h
    assert np.abs(gy.values).max() == 0.0


def test_hessian_of_product_is_second_order():
    errs = []
    for N in (32, 64):
        g = TorusGrid((N, N))
        v, _, H = shape_derivatives("sin_x_cos_y", g)
        errs.append(np.abs(hessian(GridField(g, v)).values - H).max())
    assert 3.5 <= errs[0] / errs[1] <= 4.5


def test_hessian_x_independent_field():
    g = TorusGrid((16, 16))
    X, Y = g.coords()
    H = hessian(GridField(g, np.cos(Y))).values
    assert np.abs(H[..., 0, :]).max() <= 1e-13 and np.abs(H[..., :, 0]).max() <= 1e-13


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 31 - 1), st.sampled_from([2, 3]))
def test_discrete_operators_translation_equivariant(seed, dim):
    rng = np.random.default_rng(seed)
    g = TorusGrid((8,) * dim)
    u = GridField(g, rng.standard_normal(g.shape))
    shift = tuple(int(s) for s in rng.integers(0, 8, dim))
    axes = tuple(range(dim))
    H = hessian(u).values
    Hs = hessian(u.with_values(np.roll(u.values, shift, axes))).values
    np.testing.assert_array_equal(Hs, np.roll(H, shift, axes))
    assert np.array_equal(H, np.swapaxes(H, -1, -2))


def test_augmented_hessian_examples():
    g = TorusGrid((16, 16))
    S = TensorField.constant(g, np.diag([2.0, 3.0]))
    zero = GridField.constant(g, 0.0)
    for sign in ("positive", "negative"):
        np.testing.assert_array_equal(augmented_hessian(zero, S, sign).values, S.values)
    S2 = TensorField.constant(g, 2 * np.eye(2))
    for eps in (0.05, 0.1):
        u = field(g, lambda x, y: eps * np.sin(x))
        M = augmented_hessian(u, S2).values.reshape(-1, 2, 2)
        assert evaluate_batch(M, 2).inside.all()


def test_augmented_hessian_sign_flip():
    g = TorusGrid((16, 16))
    S = TensorField.constant(g, np.eye(2))
    u = field(g, lambda x, y: 0.3 * np.sin(x) * np.cos(y))
    Mp = augmented_hessian(u, S, "positive").values
    Mn = augmented_hessian(u, S, "negative").values
    H = hessian(u).values
    np.testing.assert_allclose(Mp + Mn, 2 * (H + S.values), atol=1e-14)


def test_conformal_hessian_examples():
    g = TorusGrid((32, 32))
    u = field(g, lambda x, y: 0.2 * np.sin(x) * np.cos(y))
    h = field(g, lambda x, y: np.cos(x + 2 * y))
    zero = GridField.constant(g, 0.0)
    np.testing.assert_array_equal(conformal_hessian(h, zero).values, hessian(h).values)
    assert np.abs(conformal_hessian(GridField.constant(g, 1.0), u).values).max() == 0
    # h = u: nabla^2 u + 2 du (x) du - |du|^2 I from independent pieces
    gx, gy = (c.values for c in gradient(u))
    du = np.stack([gx, gy], axis=-1)
    direct = (hessian(u).values + 2 * du[..., :, None] * du[..., None, :]
              - (gx ** 2 + gy ** 2)[..., None, None] * np.eye(2))
    np.testing.assert_allclose(conformal_hessian(u, u).values, direct, atol=1e-14)


@pytest.mark.parametrize("dim", [2, 3])
def test_conformal_hessian_christoffel_ratio(dim):
    errs = []
    for N in (16, 32, 64) if dim == 2 else (12, 24):
        g = TorusGrid((N,) * dim)
        shape = "sin_x_cos_y" if dim == 2 else "sin_x_cos_y_cos_z"
        v, du, _ = scalar_derivatives({"shape": shape, "amplitude": 0.3}, g)
        u = GridField(g, v)
        h = GridField(g, shape_derivatives("cos_sum", g)[0])
        diff = conformal_hessian(h, u).values - christoffel_hessian(h, du).values
        errs.append(np.abs(diff).max())
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    assert all(3.0 <= r <= 5.0 for r in ratios), ratios


@pytest.mark.parametrize("n", range(3, 9))
def test_sphere_and_projective_invariants(n):
    a, D, inv = model_schouten(ModelGeometry.sphere(n))
    assert a == 0.5 and abs(inv - math.pi ** 2 / 2) <= 1e-12
    assert abs(model_schouten(ModelGeometry.real_projective(n))[2] - math.pi ** 2 / 8) <= 1e-12


@pytest.mark.parametrize("m", [2, 3, 4])
def test_complex_projective_invariant(m):
    inv = model_schouten(ModelGeometry.complex_projective(m))[2]
    assert abs(inv - (m + 1) / (2 * m - 1) * math.pi ** 2 / 4) <= 1e-12


def test_schouten_needs_dimension_three():
    with pytest.raises(DomainError):
        model_schouten(ModelGeometry.sphere(2))


@pytest.mark.parametrize("name", SHAPES)
def test_catalog_derivatives_match_differences(name):
    dim = 3 if name.endswith("_z") else 2
    errs = []
    for N in (32, 64):
        g = TorusGrid((N,) * dim, (2.0,) * dim)
        v, G, H = shape_derivatives(name, g)
        u = GridField(g, v)
        Gd = np.stack([c.values for c in gradient(u)], axis=-1)
        errs.append(max(np.abs(Gd - G).max(), np.abs(hessian(u).values - H).max()))
    assert errs[1] <= errs[0] / 3.5 or errs[0] < 1e-12


def test_catalog_rejects_unknown_and_oversized():
    g = TorusGrid((8, 8))
    with pytest.raises(ConfigError):
        shape_derivatives("tan_x", g)
    with pytest.raises(ConfigError):
        shape_derivatives("sin_x_cos_y_cos_z", g)
    with pytest.raises(ConfigError):
        tensor_field({"diag": [1.0, 2.0, 3.0]}, g)


@pytest.mark.parametrize("fmt", ["bin", "csv"])
def test_field_round_trip(tmp_path, fmt):
    g = TorusGrid((8, 12), (1.0, 3.5))
    rng = np.random.default_rng(0)
    u = GridField(g, rng.standard_normal(g.shape) * 10.0 ** rng.integers(-300, 300, g.shape))
    header = write_field(u, tmp_path / "u", fmt)
    v = read_field(header)
    assert v.grid == g
    assert np.array_equal(u.values, v.values)
    raw = (tmp_path / f"u.{fmt}")
    assert raw.exists()


def test_field_header_mismatch(tmp_path):
    g = TorusGrid((8, 8))
    write_field(GridField.constant(g, 1.0), tmp_path / "u")
    (tmp_path / "u.bin").write_bytes(b"\0" * 16)
    with pytest.raises(ValueError):
        read_field(tmp_path / "u.json")
