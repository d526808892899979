"""Named spatial functions with closed-form derivatives.

A scalar spec is ``{"shape": name, "base": b, "amplitude": a}`` meaning
``b + a * shape(x)``; ``{"shape": "constant", "base": b}`` is the constant b.
Shapes are periodic on the grid: each axis uses the wave number 2 pi / L_i.
"""
import numpy as np

from .errors import ConfigError
from .geometry import GridField, TensorField

_PRODUCTS = {
    "sin_x": ("sin",),
    "cos_x": ("cos",),
    "sin_x_cos_y": ("sin", "cos"),
    "cos_x_cos_y": ("cos", "cos"),
    "sin_x_sin_y": ("sin", "sin"),
    "sin_x_cos_y_cos_z": ("sin", "cos", "cos"),
}
SHAPES = tuple(_PRODUCTS) + ("cos_sum", "constant")


def _factor(kind, kx, kappa):
    """value, first and second derivative of one axis factor."""
    if kind == "sin":
        s, c = np.sin(kx), np.cos(kx)
        return s, kappa * c, -kappa * kappa * s
    if kind == "cos":
        s, c = np.sin(kx), np.cos(kx)
        return c, -kappa * s, -kappa * kappa * c
    one = np.ones_like(kx)
    return one, 0.0 * one, 0.0 * one


def shape_derivatives(name, grid):
    """Exact (value, gradient, Hessian) of a catalog shape at the grid points."""
    d = grid.dim
    X = grid.coords()
    kappas = [2.0 * np.pi / L for L in grid.lengths]
    val = np.zeros(grid.shape)
    grad = np.zeros(grid.shape + (d,))
    hess = np.zeros(grid.shape + (d, d))
    if name == "constant":
        return val, grad, hess
    if name == "cos_sum":
        for i in range(d):
            v, dv, ddv = _factor("cos", kappas[i] * X[i], kappas[i])
            val += v
            grad[..., i] = dv
            hess[..., i, i] = ddv
        return val, grad, hess
    if name not in _PRODUCTS:
        raise ConfigError(f"unknown shape {name!r}; choose from {SHAPES}")
    kinds = _PRODUCTS[name]
    if len(kinds) > d:
        raise ConfigError(f"shape {name!r} needs dimension >= {len(kinds)}")
    kinds = kinds + ("one",) * (d - len(kinds))
    parts = [_factor(kd, kappas[i] * X[i], kappas[i]) for i, kd in enumerate(kinds)]
    vals = [p[0] for p in parts]
    val = np.prod(vals, axis=0)

    def prod_except(skip):
        out = np.ones(grid.shape)
        for j, v in enumerate(vals):
            if j not in skip:
                out = out * v
        return out

    for i in range(d):
        grad[..., i] = parts[i][1] * prod_except({i})
        hess[..., i, i] = parts[i][2] * prod_except({i})
        for j in range(i + 1, d):
            m = parts[i][1] * parts[j][1] * prod_except({i, j})
            hess[..., i, j] = m
            hess[..., j, i] = m
    return val, grad, hess


def scalar_derivatives(spec, grid):
    """Exact (value, gradient, Hessian) of ``base + amplitude * shape``."""
    base = float(spec.get("base", 0.0))
    amp = float(spec.get("amplitude", 0.0))
    v, g, H = shape_derivatives(spec.get("shape", "constant"), grid)
    return base + amp * v, amp * g, amp * H


def scalar_field(spec, grid):
    return GridField(grid, scalar_derivatives(spec, grid)[0])


def tensor_field(spec, grid):
    """S from ``{"diag": [...]}`` or ``{"scalar": c, "eps": e, "shape": name}``."""
    d = grid.dim
    if "diag" in spec:
        diag = [float(x) for x in spec["diag"]]
        if len(diag) != d:
            raise ConfigError(f"S diag has {len(diag)} entries for dimension {d}")
        return TensorField.constant(grid, np.diag(diag))
    c = float(spec["scalar"])
    eps = float(spec.get("eps", 0.0))
    v = shape_derivatives(spec.get("shape", "constant"), grid)[0]
    return TensorField.scalar_multiple(grid, c + eps * v)
