"""The sigma_k operator on the torus, its homotopy blend and linearization.

For homotopy parameter t the residual is

    t sigma_k^{1/k}(M) + (1-t) sigma_1(M) - t psi(x, u) - (1-t) sigma_1(S) e^u

with M = nabla^2 u + s (du (x) du - |du|^2/2 I) + S, s = +1 for the standard
equation and s = -1 for the negative-cone variant.  At t = 1 this is the
equation itself; at t = 0 the unique solution is u = 0.
"""
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NotAdmissible
from .geometry import (GridField, TensorField, augmented_array, conformal_array,
                       grad_array, hess_array)
from .symfunc import evaluate_batch


@dataclass(frozen=True)
class PsiSpec:
    """psi(x, u) = f(x) * exp(a * u)."""

    f: GridField
    a: float = 1.0

    def __post_init__(self):
        if not self.f.min() > 0.0:
            raise DomainError("psi: f must be strictly positive")
        if self.a == 0.0:
            raise DomainError("psi: exponent a must be non-zero")

    def value(self, u):
        return self.f.values * np.exp(self.a * u)


@dataclass(frozen=True)
class Problem:
    grid: object
    k: int
    S: TensorField
    psi: PsiSpec
    sign: str = "positive"

    def __post_init__(self):
        d = self.grid.dim
        if not 1 <= self.k <= d:
            raise DomainError(f"k={self.k} outside 1..{d}")
        if self.sign not in ("positive", "negative"):
            raise DomainError(f"unknown sign {self.sign!r}")
        if self.S.grid != self.grid or self.psi.f.grid != self.grid:
            raise DomainError("S, f and the problem use different grids")
        ev = evaluate_batch(self.S.flat(), self.k, 1.0)
        if not ev.inside.all():
            bad = int(np.argmin(ev.inside))
            raise DomainError(
                f"S leaves Gamma_{self.k}^+ at grid index "
                f"{np.unravel_index(bad, self.grid.shape)}")

    @property
    def sgn(self):
        return 1.0 if self.sign == "positive" else -1.0

    def sigma1_S(self):
        return np.trace(self.S.values, axis1=-2, axis2=-1)


@dataclass
class OperatorState:
    """Pointwise data of the blended operator at (u, t), flattened over points."""

    t: float
    grad: np.ndarray      # (P, d)
    M: np.ndarray         # (P, d, d) augmented Hessian
    ev: object            # symfunc.BatchEval
    residual: np.ndarray  # (P,)
    zeroth: np.ndarray    # (P,) d(rhs)/du
    coef: np.ndarray      # (P, d, d) derivative of the blend w.r.t. M


def _raise_first(ev, shape, what):
    first = int(np.argmin(ev.admissible))
    j = int(ev.fail_order[first])
    val = float(ev.sig[first, j]) if j > 0 else float(ev.value[first])
    idx = tuple(int(i) for i in np.unravel_index(first, shape))
    raise NotAdmissible(f"{what} leaves the cone at grid index {idx} "
                        f"(order {j}, value {val:.3e})",
                        index=idx, order=j, value=val)


def evaluate(u, p, t, check=True):
    """Assemble the operator at the array ``u``; raises NotAdmissible."""
    grid = p.grid
    d = grid.dim
    sp = grid.spacing
    g = grad_array(u, sp)
    M = augmented_array(hess_array(u, sp), g, p.S.values, p.sgn).reshape(-1, d, d)
    ev = evaluate_batch(M, p.k, t)
    if check and not ev.admissible.all():
        _raise_first(ev, grid.shape, "iterate")
    uf = u.ravel()
    psi = p.psi.value(u).ravel()
    s1S_eu = p.sigma1_S().ravel() * np.exp(uf)
    residual = ev.value - (t * psi + (1.0 - t) * s1S_eu)
    zeroth = t * p.psi.a * psi + (1.0 - t) * s1S_eu
    k = p.k
    scale = np.zeros_like(ev.root)
    inside = ev.inside
    # d sigma_k^{1/k} = (1/k) sigma_k^{(1-k)/k} T_{k-1} : dM
    scale[inside] = (t / k) * ev.root[inside] ** (1 - k)
    coef = scale[:, None, None] * ev.T + (1.0 - t) * np.eye(d)
    return OperatorState(t, g.reshape(-1, d), M, ev, residual, zeroth, coef)


def residual(u, p, t=1.0):
    """Pointwise residual of the t-blended equation as a GridField."""
    st = evaluate(u.values, p, t)
    return GridField(p.grid, st.residual.reshape(p.grid.shape))


def linearize_apply(u, h, p, t=1.0):
    """Directional derivative of :func:`residual` at u in the direction h.

    The M-derivative coefficient is contracted with the Hessian of h in the
    conformal metric exp(-2 s u) g, then the u-derivative of the right-hand
    side times h is subtracted.
    """
    st = evaluate(u.values, p, t)
    grid = p.grid
    d = grid.dim
    sp = grid.spacing
    hv = h.values
    dM = conformal_array(hess_array(hv, sp), grad_array(hv, sp),
                         p.sgn * st.grad.reshape(grid.shape + (d,)))
    out = np.einsum("pij,pij->p", st.coef, dM.reshape(-1, d, d)) - st.zeroth * hv.ravel()
    return GridField(grid, out.reshape(grid.shape))


class LinearizedOperator:
    """Matrix-free Jacobian at a fixed state, as C : D^2 h + b . D h - c0 h.

    C : (D^2 h + s(du (x) dh + dh (x) du) - s<du, dh> I) expands to
    C : D^2 h + s(2 C du - tr(C) du) . dh because C is symmetric.
    """

    def __init__(self, state, p):
        self.grid = p.grid
        self.C = state.coef
        gu = p.sgn * state.grad
        trC = np.trace(self.C, axis1=1, axis2=2)
        self.b = 2.0 * np.einsum("pij,pj->pi", self.C, gu) - trC[:, None] * gu
        self.c0 = state.zeroth

    @property
    def size(self):
        return self.grid.npoints

    def apply(self, h):
        sp = self.grid.spacing
        hv = h.reshape(self.grid.shape)
        d = self.grid.dim
        Hh = hess_array(hv, sp).reshape(-1, d, d)
        gh = grad_array(hv, sp).reshape(-1, d)
        return (np.einsum("pij,pij->p", self.C, Hh)
                + np.einsum("pi,pi->p", self.b, gh) - self.c0 * h.ravel())

    def diagonal(self):
        # only the pure second differences have a centre weight
        diag = -self.c0.copy()
        for i, h in enumerate(self.grid.spacing):
            diag -= 2.0 * self.C[:, i, i] / (h * h)
        return diag


@dataclass
class SegmentResult:
    passed: bool
    s: float = None
    index: tuple = None

    def __bool__(self):
        return self.passed


def admissible_segment_test(w0, w1, p, samples=33):
    """Check admissibility of u_s = ln((1-s) w0 + s w1) for s in [0, 1].

    ``w0`` and ``w1`` are the exponentiated fields e^{u_0}, e^{u_1}.
    """
    if min(w0.min(), w1.min()) <= 0.0:
        raise DomainError("segment test needs positive w0, w1")
    grid = p.grid
    d = grid.dim
    sp = grid.spacing
    for s in np.linspace(0.0, 1.0, samples):
        us = np.log((1.0 - s) * w0.values + s * w1.values)
        M = augmented_array(hess_array(us, sp), grad_array(us, sp),
                            p.S.values, p.sgn).reshape(-1, d, d)
        ev = evaluate_batch(M, p.k, 1.0)
        if not ev.admissible.all():
            first = int(np.argmin(ev.admissible))
            idx = tuple(int(i) for i in np.unravel_index(first, grid.shape))
            return SegmentResult(False, float(s), idx)
    return SegmentResult(True)


def negative_residual(u, p):
    """sigma_k^{1/k}(nabla^2 u - du (x) du + |du|^2/2 I + S) - psi(x, u)."""
    if p.sign != "negative":
        raise DomainError("negative_residual needs a problem with sign='negative'")
    grid = p.grid
    d = grid.dim
    sp = grid.spacing
    uv = u.values
    g = grad_array(uv, sp)
    sq = np.einsum("...i,...i->...", g, g)
    M = (hess_array(uv, sp) - g[..., :, None] * g[..., None, :]
         + 0.5 * sq[..., None, None] * np.eye(d) + p.S.values)
    ev = evaluate_batch(M.reshape(-1, d, d), p.k, 1.0)
    if not ev.admissible.all():
        _raise_first(ev, grid.shape, "negative-cone iterate")
    out = ev.root.reshape(grid.shape) - p.psi.value(uv)
    return GridField(grid, out)
