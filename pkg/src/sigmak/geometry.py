"""Periodic grids, finite-difference operators and model geometries.

The solver background is the flat torus R^d / (L_1 Z x ... x L_d Z), where
Christoffel symbols and curvature vanish, so covariant derivatives are plain
partial derivatives.  All stencils are second order and periodic.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from .errors import DomainError

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class TorusGrid:
    """Uniform periodic grid on [0, L_1) x ... x [0, L_d)."""

    sizes: tuple
    lengths: tuple = None

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        if len(sizes) not in (2, 3):
            raise DomainError(f"grid dimension must be 2 or 3, got {len(sizes)}")
        if any(s < 8 or s % 2 for s in sizes):
            raise DomainError(f"grid sizes must be even and >= 8, got {sizes}")
        lengths = self.lengths
        if lengths is None:
            lengths = (TWO_PI,) * len(sizes)
        lengths = tuple(float(x) for x in lengths)
        if len(lengths) != len(sizes) or any(not x > 0 for x in lengths):
            raise DomainError(f"invalid lengths {lengths} for sizes {sizes}")
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "lengths", lengths)

    @property
    def dim(self):
        return len(self.sizes)

    @property
    def shape(self):
        return self.sizes

    @property
    def npoints(self):
        return math.prod(self.sizes)

    @property
    def spacing(self):
        return tuple(L / N for L, N in zip(self.lengths, self.sizes))

    @property
    def volume(self):
        return math.prod(self.lengths)

    @property
    def cell_volume(self):
        return math.prod(self.spacing)

    @property
    def diameter(self):
        # flat torus: farthest point is half a period away along every axis
        return 0.5 * math.sqrt(sum(L * L for L in self.lengths))

    def coords(self):
        axes = [np.arange(N) * h for N, h in zip(self.sizes, self.spacing)]
        return np.meshgrid(*axes, indexing="ij")

    def header(self):
        return {"dim": self.dim, "sizes": list(self.sizes), "lengths": list(self.lengths)}


def _frozen(values, shape):
    arr = np.array(values, dtype=np.float64)
    if arr.shape != tuple(shape):
        raise DomainError(f"values have shape {arr.shape}, expected {tuple(shape)}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("field contains non-finite values")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class GridField:
    """Scalar values at the points of a :class:`TorusGrid`."""

    grid: TorusGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values, self.grid.shape))

    @classmethod
    def constant(cls, grid, c):
        return cls(grid, np.full(grid.shape, float(c)))

    @classmethod
    def from_function(cls, grid, fn):
        return cls(grid, fn(*grid.coords()))

    def min(self):
        return float(self.values.min())

    def max(self):
        return float(self.values.max())

    def mean(self):
        return float(self.values.mean())

    def integral(self):
        return float(self.values.sum() * self.grid.cell_volume)

    def with_values(self, values):
        return GridField(self.grid, values)


@dataclass(frozen=True, eq=False)
class TensorField:
    """One symmetric d x d matrix per grid point; values shape (*grid.shape, d, d)."""

    grid: TorusGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        d = self.grid.dim
        arr = _frozen(self.values, self.grid.shape + (d, d))
        if not np.array_equal(arr, np.swapaxes(arr, -1, -2)):
            raise DomainError("tensor field is not symmetric")
        object.__setattr__(self, "values", arr)

    @classmethod
    def constant(cls, grid, S):
        S = np.asarray(S, dtype=np.float64)
        return cls(grid, np.broadcast_to(S, grid.shape + S.shape))

    @classmethod
    def scalar_multiple(cls, grid, scale):
        """S(x) = scale(x) * I for a scalar array ``scale``."""
        eye = np.eye(grid.dim)
        return cls(grid, np.asarray(scale, dtype=np.float64)[..., None, None] * eye)

    def flat(self):
        d = self.grid.dim
        return self.values.reshape(-1, d, d)


# -- array-level stencils ---------------------------------------------------

def grad_array(u, spacing):
    """Central differences; returns shape (*u.shape, d)."""
    return np.stack(
        [(np.roll(u, -1, ax) - np.roll(u, 1, ax)) / (2.0 * h)
         for ax, h in enumerate(spacing)], axis=-1)


def hess_array(u, spacing):
    """Second differences with the 4-point cross stencil off the diagonal.

    Each mixed entry is computed once and written to both (i, j) and (j, i),
    so the result is exactly symmetric.
    """
    d = len(spacing)
    H = np.empty(u.shape + (d, d))
    for i, hi in enumerate(spacing):
        H[..., i, i] = (np.roll(u, -1, i) - 2.0 * u + np.roll(u, 1, i)) / (hi * hi)
        up = np.roll(u, -1, i)
        um = np.roll(u, 1, i)
        for j in range(i + 1, d):
            hj = spacing[j]
            m = (np.roll(up, -1, j) - np.roll(up, 1, j)
                 - np.roll(um, -1, j) + np.roll(um, 1, j)) / (4.0 * hi * hj)
            H[..., i, j] = m
            H[..., j, i] = m
    return H


def outer_sym(a, b):
    """a (x) b + b (x) a, pointwise over leading axes."""
    ab = a[..., :, None] * b[..., None, :]
    return ab + np.swapaxes(ab, -1, -2)


def augmented_array(H, g, S, sign=1.0):
    """H + sign * (g (x) g - |g|^2/2 I) + S."""
    d = g.shape[-1]
    gg = g[..., :, None] * g[..., None, :]
    sq = np.einsum("...i,...i->...", g, g)
    return H + sign * (gg - 0.5 * sq[..., None, None] * np.eye(d)) + S


def conformal_array(Hh, gh, gu):
    """Hessian of h in the metric exp(-2u) g, flat g."""
    d = gh.shape[-1]
    dot = np.einsum("...i,...i->...", gu, gh)
    return Hh + outer_sym(gu, gh) - dot[..., None, None] * np.eye(d)


def _sign(sign):
    if sign == "positive":
        return 1.0
    if sign == "negative":
        return -1.0
    raise DomainError(f"unknown sign {sign!r}")


# -- field-level operators --------------------------------------------------

def gradient(u):
    g = grad_array(u.values, u.grid.spacing)
    return tuple(GridField(u.grid, g[..., i]) for i in range(u.grid.dim))


def hessian(u):
    return TensorField(u.grid, hess_array(u.values, u.grid.spacing))


def augmented_hessian(u, S, sign="positive"):
    """nabla^2 u +/- (du (x) du - |du|^2/2 g) + S on the flat torus."""
    if S.grid != u.grid:
        raise DomainError("S and u live on different grids")
    sp = u.grid.spacing
    M = augmented_array(hess_array(u.values, sp), grad_array(u.values, sp),
                        S.values, _sign(sign))
    return TensorField(u.grid, M)


def conformal_hessian(h, u):
    """nabla^2 h + du (x) dh + dh (x) du - <du, dh> g."""
    if h.grid != u.grid:
        raise DomainError("h and u live on different grids")
    sp = u.grid.spacing
    return TensorField(u.grid, conformal_array(
        hess_array(h.values, sp), grad_array(h.values, sp), grad_array(u.values, sp)))


def christoffel_hessian(h, du):
    """Hessian of h in exp(-2u) g assembled from the Christoffel symbols.

    ``du`` is the gradient of u with shape (*grid.shape, d), discrete or
    exact.  Uses Gamma~^l_ij = -u_i delta^l_j - u_j delta^l_i + delta_ij u_l
    and (nabla~^2 h)_ij = h_ij - Gamma~^l_ij h_l.
    """
    grid = h.grid
    d = grid.dim
    eye = np.eye(d)
    du = np.asarray(du, dtype=np.float64)
    # Gamma[..., l, i, j]
    gamma = (-du[..., None, :, None] * eye[:, None, :]
             - du[..., None, None, :] * eye[:, :, None]
             + du[..., :, None, None] * eye[None, :, :])
    dh = grad_array(h.values, grid.spacing)
    H = hess_array(h.values, grid.spacing) - np.einsum("...lij,...l->...ij", gamma, dh)
    return TensorField(grid, 0.5 * (H + np.swapaxes(H, -1, -2)))


# -- model geometries ---------------------------------------------------------

@dataclass(frozen=True)
class ModelGeometry:
    """Einstein model space: Ric = ricci_multiple * g, R = real_dim * ricci_multiple."""

    kind: str
    param: int
    real_dim: int
    ricci_multiple: float
    diameter: float

    @classmethod
    def sphere(cls, n):
        return cls("Sphere", n, n, float(n - 1), math.pi)

    @classmethod
    def real_projective(cls, n):
        return cls("RealProjective", n, n, float(n - 1), math.pi / 2)

    @classmethod
    def complex_projective(cls, m):
        # Fubini-Study normalized so that Ric = (2m + 2) g
        return cls("ComplexProjective", m, 2 * m, float(2 * m + 2), math.pi / 2)

    @property
    def scalar_curv(self):
        return self.real_dim * self.ricci_multiple

    @property
    def schouten_multiple(self):
        n = self.real_dim
        if n < 3:
            raise DomainError(f"Schouten tensor undefined in real dimension {n}")
        return (self.ricci_multiple - self.scalar_curv / (2 * (n - 1))) / (n - 2)

    @property
    def label(self):
        return f"{self.kind}({self.param})"


def model_schouten(m):
    """(Schouten multiple, diameter, Schouten multiple * diameter**2)."""
    a = m.schouten_multiple
    return a, m.diameter, a * m.diameter ** 2
