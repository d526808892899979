"""Damped Newton, homotopy continuation and the determinant-equation solvers.

The continuation follows the blend t sigma_k^{1/k} + (1-t) sigma_1 from the
trivial solution u = 0 at t = 0 to the target equation at t = 1.  The
determinant equation with a decreasing right-hand side is reached through a
mean-normalized equation and a Picard iteration on top of it.
"""
from dataclasses import dataclass, field, replace
import math

import numpy as np
from scipy.sparse.linalg import LinearOperator, bicgstab, gmres

from .errors import (ContinuationStalled, DomainError, FixedPointStalled,
                     NoConvergence, NotAdmissible)
from .estimates import c0_bounds, diagnostics, harnack_gap, lambda_max, verify_c0
from .geometry import GridField, augmented_array, grad_array, hess_array
from .pde import LinearizedOperator, OperatorState, _raise_first, evaluate
from .symfunc import evaluate_batch


@dataclass(frozen=True)
class SolverOptions:
    residual_tol: float = 1e-8
    max_newton_iters: int = 50
    line_search_shrink: float = 0.5
    min_step: float = 1e-10
    dt_initial: float = 1.0 / 16
    dt_min: float = 1.0 / 1024
    dt_max: float = 0.25
    grow_below_iters: int = 4
    linear_tol: float = 1e-10
    linear_max_iters: int = None

    def __post_init__(self):
        for name in ("residual_tol", "line_search_shrink", "min_step", "dt_initial",
                     "dt_min", "dt_max", "linear_tol"):
            if not getattr(self, name) > 0:
                raise DomainError(f"solver option {name} must be positive")
        if not self.line_search_shrink < 1:
            raise DomainError("line_search_shrink must be < 1")
        if not self.dt_min <= self.dt_initial <= self.dt_max <= 1:
            raise DomainError("need dt_min <= dt_initial <= dt_max <= 1")
        if self.max_newton_iters < 1:
            raise DomainError("max_newton_iters must be >= 1")

    def linear_iters(self, size):
        if self.linear_max_iters is not None:
            return int(self.linear_max_iters)
        return max(1, int(10 * math.sqrt(size)))


# -- linear and Newton kernels --------------------------------------------------

def _krylov(matvec, diag, rhs, opts):
    """Jacobi-preconditioned BiCGSTAB, GMRES if it breaks down."""
    n = rhs.size
    A = LinearOperator((n, n), matvec=matvec, dtype=np.float64)
    inv = 1.0 / diag
    M = LinearOperator((n, n), matvec=lambda x: inv * x, dtype=np.float64)
    maxit = opts.linear_iters(n)
    x, info = bicgstab(A, rhs, rtol=opts.linear_tol, atol=0.0, maxiter=maxit, M=M)
    if info != 0 or not np.all(np.isfinite(x)):
        x, info = gmres(A, rhs, rtol=opts.linear_tol, atol=0.0, restart=60,
                        maxiter=max(1, maxit // 60), M=M)
    return x


def _damped_newton(u0, assemble, opts):
    """Newton with halving line search on the sup-norm residual.

    ``assemble(u)`` returns an object with ``residual`` and ``solve(rhs)``; it
    raises NotAdmissible when u leaves the ellipticity cone.
    Returns (u, iterations, residual sup-norm).
    """
    u = u0
    st = assemble(u)
    rsup = float(np.abs(st.residual).max())
    it = 0
    while rsup > opts.residual_tol:
        if it >= opts.max_newton_iters:
            raise NoConvergence(it, rsup)
        delta = st.solve(-st.residual).reshape(u.shape)
        step = 1.0
        accepted = False
        last_err = None
        any_admissible = False
        while step >= opts.min_step:
            trial = u + step * delta
            try:
                trial_st = assemble(trial)
            except NotAdmissible as exc:
                last_err = exc
                step *= opts.line_search_shrink
                continue
            any_admissible = True
            trial_sup = float(np.abs(trial_st.residual).max())
            if trial_sup < rsup:
                u, st, rsup = trial, trial_st, trial_sup
                accepted = True
                break
            step *= opts.line_search_shrink
        it += 1
        if not accepted:
            if not any_admissible and last_err is not None:
                raise last_err
            raise NoConvergence(it, rsup)
    return u, it, rsup


class _BlendStep:
    def __init__(self, p, t, opts, u):
        self.state = evaluate(u, p, t)
        self.residual = self.state.residual
        self.p = p
        self.opts = opts

    def solve(self, rhs):
        op = LinearizedOperator(self.state, self.p)
        return _krylov(op.apply, op.diagonal(), rhs, self.opts)


def newton_solve(p, t, u0, opts=None):
    """Solve the t-blended equation from ``u0``; returns a GridField."""
    opts = opts or SolverOptions()
    u, _, _ = _damped_newton(np.array(u0.values), lambda v: _BlendStep(p, t, opts, v), opts)
    return GridField(p.grid, u)


# -- continuation ------------------------------------------------------------------

@dataclass
class ContinuationState:
    t: float
    u: GridField
    dt: float                     # next step the controller will try
    newton_iters_last: int
    admissible: bool = True
    record: dict = field(default_factory=dict)
    c0: object = None


def _record(p, u, t, dt_used, iters, rsup):
    diag = diagnostics(u, p)
    return {
        "t": t,
        "dt": dt_used,
        "newton_iters": iters,
        "residual_sup": rsup,
        "u_min": u.min(),
        "u_max": u.max(),
        "sigma_km1_max": diag["sigma_km1_max"],
        "hess_eig_max": diag["hess_eig_max"],
    }


def _accept(p, u_arr, t, dt_used, dt_next, iters, rsup):
    u = GridField(p.grid, u_arr)
    rep = verify_c0(u, c0_bounds(p, t)) if p.psi.a > 0 else None
    return ContinuationState(t, u, dt_next, iters, True,
                             _record(p, u, t, dt_used, iters, rsup), rep)


def initial_state(p, opts=None):
    """The t = 0 state, where u = 0 solves the blended equation exactly."""
    opts = opts or SolverOptions()
    u = np.zeros(p.grid.shape)
    rsup = float(np.abs(evaluate(u, p, 0.0).residual).max())
    return _accept(p, u, 0.0, 0.0, opts.dt_initial, 0, rsup)


def continuation_solve(p, opts=None, start=None):
    """Path-follow t from 0 (or ``start``) to 1; returns (u, trace).

    The step doubles (up to dt_max) after a step needing at most
    grow_below_iters Newton iterations and halves after a failed one.
    """
    opts = opts or SolverOptions()
    if not p.psi.a > 0:
        raise DomainError("continuation needs an increasing right-hand side (a > 0)")
    state = start if start is not None else initial_state(p, opts)
    trace = [state]
    t, u, dt = state.t, np.array(state.u.values), state.dt
    while t < 1.0:
        t_new = min(1.0, t + dt)
        try:
            u_new, iters, rsup = _damped_newton(
                u, lambda v, tt=t_new: _BlendStep(p, tt, opts, v), opts)
        except (NoConvergence, NotAdmissible):
            dt *= 0.5
            if dt < opts.dt_min:
                raise ContinuationStalled(t, trace)
            continue
        dt_used = t_new - t
        if iters <= opts.grow_below_iters:
            dt = min(2.0 * dt, opts.dt_max)
        t, u = t_new, u_new
        state = _accept(p, u, t, dt_used, dt, iters, rsup)
        trace.append(state)
    return state.u, trace


# -- determinant equation -----------------------------------------------------------

@dataclass(frozen=True)
class NormalizedProblem:
    """det(nabla^2 u + du (x) du - |du|^2/2 + S_t) = rhs^{n tp} e^{-n <u>}.

    S_t = (1-t) lambda_max(S) I + t S and <u> = mean_weight * mean(u), so the
    default weight (the torus volume) makes <u> the integral of u.  With
    ``t_power`` None the exponent tp equals t; otherwise it is fixed.
    """

    problem: object
    mean_weight: float = None
    t_power: float = None

    def __post_init__(self):
        p = self.problem
        if p.k != p.grid.dim or p.sign != "positive":
            raise DomainError("normalized equation needs k = n and the positive sign")
        if self.mean_weight is None:
            object.__setattr__(self, "mean_weight", p.grid.volume)
        if not self.mean_weight > 0:
            raise DomainError("mean_weight must be positive")

    def blended_S(self, t):
        p = self.problem
        lam = lambda_max(p.S)
        d = p.grid.dim
        return (1.0 - t) * lam * np.eye(d) + t * p.S.values

    def mean(self, u):
        """<u> for an array or a GridField."""
        vals = u.values if isinstance(u, GridField) else u
        return self.mean_weight * float(np.mean(vals))


class _DetStep:
    def __init__(self, np_, St, target, opts, u):
        p = np_.problem
        grid = p.grid
        d = grid.dim
        sp = grid.spacing
        g = grad_array(u, sp)
        M = augmented_array(hess_array(u, sp), g, St, 1.0).reshape(-1, d, d)
        ev = evaluate_batch(M, d, 1.0)
        if not ev.admissible.all():
            _raise_first(ev, grid.shape, "normalized iterate")
        self.R = target * math.exp(-d * np_.mean(u))
        self.residual = ev.sig[:, d] - self.R
        self.state = OperatorState(1.0, g.reshape(-1, d), M, ev, self.residual,
                                   np.zeros(grid.npoints), ev.T)
        self.np_ = np_
        self.opts = opts

    def solve(self, rhs):
        p = self.np_.problem
        op = LinearizedOperator(self.state, p)
        d = p.grid.dim
        w = self.np_.mean_weight
        coupling = d * self.R
        P = op.size

        def matvec(h):
            return op.apply(h) + coupling * (w * float(np.mean(h)))

        return _krylov(matvec, op.diagonal() + coupling * w / P, rhs, self.opts)


def _det_target(np_, t, rhs):
    d = np_.problem.grid.dim
    tp = t if np_.t_power is None else np_.t_power
    return rhs.values.ravel() ** (d * tp)


def normalized_residual(np_, t, rhs, u):
    """Pointwise residual of the normalized determinant equation."""
    st = _DetStep(np_, np_.blended_S(t), _det_target(np_, t, rhs), SolverOptions(),
                  np.asarray(u.values))
    return GridField(np_.problem.grid, st.residual.reshape(np_.problem.grid.shape))


def solve_normalized(np_, t, rhs, opts=None, u0=None):
    """Damped Newton for the normalized equation at blend t.

    Without ``u0`` Newton starts from the constant that matches the equation
    on average.
    """
    opts = opts or SolverOptions()
    grid = np_.problem.grid
    d = grid.dim
    St = np_.blended_S(t)
    target = _det_target(np_, t, rhs)
    if u0 is None:
        det = np.linalg.det(St.reshape(-1, d, d))
        c = -math.log(float(np.mean(target / det))) / (d * np_.mean_weight)
        start = np.full(grid.shape, -c)
    else:
        start = np.array(u0.values)
    u, _, _ = _damped_newton(start, lambda v: _DetStep(np_, St, target, opts, v), opts)
    return GridField(grid, u)


DEFAULT_SCHEDULE = (0.25, 0.5, 0.75, 1.0)


def fixed_point_solve(p, t_schedule=DEFAULT_SCHEDULE, opts=None, mean_weight=None,
                      gap_tol=1e-8, max_outer=500):
    """Solve det^{1/n}(nabla^2 u + du (x) du - |du|^2/2 + S) = f e^{-2u}.

    For each t of the schedule, iterates u <- H(u, t) where H(u, t) solves the
    normalized equation with right-hand side f^t e^{-2 t u}.  The fixed point at
    t = 1 is shifted by <u>/2.  Returns (u, trace).
    """
    opts = opts or SolverOptions()
    if p.psi.a != -2.0:
        raise DomainError("fixed-point route is for psi = f e^{-2u} (a = -2)")
    harnack_gap(p.S, p.grid.diameter)
    sched = [float(t) for t in t_schedule]
    if not sched or sched[-1] != 1.0 or any(b <= a for a, b in zip(sched, sched[1:])):
        raise DomainError("t_schedule must increase strictly and end at 1")
    np_ = NormalizedProblem(p, mean_weight)
    fv = p.psi.f.values
    u = np.zeros(p.grid.shape)
    trace = []
    for t in sched:
        npt = replace(np_, t_power=1.0)
        for m in range(1, max_outer + 1):
            rhs = GridField(p.grid, fv ** t * np.exp(-2.0 * t * u))
            v = solve_normalized(npt, t, rhs, opts, GridField(p.grid, u)).values
            gap = float(np.abs(v - u).max())
            u = v
            trace.append({"t": t, "iteration": m, "gap": gap,
                          "u_min": float(u.min()), "u_max": float(u.max()),
                          "mean": np_.mean(u)})
            if gap <= gap_tol:
                break
        else:
            raise FixedPointStalled(max_outer, gap, t, trace)
    return GridField(p.grid, u + 0.5 * np_.mean(u)), trace
