"""A-priori bounds and the constants that enter them.

Covers the C^0 bounds from the min/max-point argument, the phi(s)
constructor of the gradient estimate, the Harnack gap for the determinant
equation, the convexity of v = e^{u/2}, and the model-space table.
"""
from dataclasses import asdict, dataclass
import math

import numpy as np

from .errors import DomainError, HarnackInfeasible
from .geometry import ModelGeometry, augmented_array, grad_array, hess_array, model_schouten
from .kernels import newton_batch
from .symfunc import evaluate_batch

MARGIN = 1e-6
HALF_PI_SQ = math.pi ** 2 / 2


def _index(flat_idx, shape):
    return [int(i) for i in np.unravel_index(int(flat_idx), shape)]


# -- C^0 ----------------------------------------------------------------------

@dataclass(frozen=True)
class C0Bounds:
    """Bounds for solutions.

    Normal orientation: lower < u < upper everywhere.  With ``reversed``
    (decreasing right-hand side) only sup u > lower and inf u < upper hold.
    """

    lower: float
    upper: float
    reversed: bool = False

    def __post_init__(self):
        if not self.lower < self.upper:
            raise DomainError(f"C0 bounds need lower < upper, got {self.lower}, {self.upper}")


def _point_roots(p, t):
    """Per-point value of u at which the min/max-point inequality is tight."""
    ev = evaluate_batch(p.S.flat(), p.k, 1.0)
    if not ev.inside.all():
        raise DomainError("S violates the ellipticity condition")
    sk = ev.root
    f = p.psi.f.values.ravel()
    a = p.psi.a
    u1 = np.log(sk / f) / a
    if t >= 1.0:
        return u1
    if a < 0:
        raise DomainError("blended C0 bounds need an increasing right-hand side (a > 0)")
    if t <= 0.0:
        return np.zeros_like(u1)
    s1 = np.trace(p.S.flat(), axis1=1, axis2=2)
    target = t * sk + (1.0 - t) * s1
    lo = np.minimum(0.0, u1)
    hi = np.maximum(0.0, u1)
    # the blended right-hand side is increasing in u and changes sign on [lo, hi]
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        g = t * f * np.exp(a * mid) + (1.0 - t) * s1 * np.exp(mid) - target
        neg = g < 0
        lo = np.where(neg, mid, lo)
        hi = np.where(neg, hi, mid)
        if np.all(hi - lo <= 4e-16 * np.maximum(1.0, np.abs(hi))):
            break
    return 0.5 * (lo + hi)


def c0_bounds(p, t=1.0, margin=MARGIN):
    """Tightest C^0 bounds (plus ``margin``) for the t-blended equation.

    At a minimum of u the gradient vanishes and the Hessian is nonnegative, so
    sigma_k^{1/k}(S) <= psi there; at a maximum the inequality reverses.
    """
    r = _point_roots(p, t)
    return C0Bounds(float(r.min()) - margin, float(r.max()) + margin,
                    reversed=p.psi.a < 0)


@dataclass
class C0Report:
    passed: bool
    lower_slack: float
    upper_slack: float
    lower_index: list
    upper_index: list
    reversed: bool

    def to_record(self):
        return dict(check="c0_bounds", **asdict(self))


def verify_c0(u, b):
    vals = u.values
    if b.reversed:
        lo_i, hi_i = np.argmax(vals), np.argmin(vals)
    else:
        lo_i, hi_i = np.argmin(vals), np.argmax(vals)
    lo_slack = float(vals.flat[lo_i] - b.lower)
    hi_slack = float(b.upper - vals.flat[hi_i])
    return C0Report(lo_slack > 0 and hi_slack > 0, lo_slack, hi_slack,
                    _index(lo_i, vals.shape), _index(hi_i, vals.shape), b.reversed)


# -- phi(s) = c1 (c2 -/+ s)^p -------------------------------------------------

@dataclass(frozen=True)
class PhiConstants:
    c1: float
    c2: float
    p: int
    mode: str
    lower: float
    upper: float

    def derivatives(self, s):
        """phi', phi'' at ``s``."""
        s = np.asarray(s, dtype=np.float64)
        if self.mode == "positive":
            x = self.c2 - s
            d1 = -self.p * self.c1 * x ** (self.p - 1)
        else:
            x = self.c2 + s
            d1 = self.p * self.c1 * x ** (self.p - 1)
        d2 = self.p * (self.p - 1) * self.c1 * x ** (self.p - 2)
        return d1, d2

    def inequalities(self, s):
        """(first, second) arrays that must both be positive.

        positive mode: -phi' and phi'' - phi'^2 + phi';
        negative mode:  phi' and phi'' - phi'^2 - phi'.
        """
        d1, d2 = self.derivatives(s)
        if self.mode == "positive":
            return -d1, d2 - d1 * d1 + d1
        return d1, d2 - d1 * d1 - d1

    def check(self, samples=10 ** 4):
        s = np.linspace(self.lower, self.upper, samples)
        first, second = self.inequalities(s)
        return bool(np.all(first > 0) and np.all(second > 0)), float(first.min()), float(second.min())


def _positive_constants(lo, hi):
    p = 2
    # smallest p with hi < lo + p - 1 - 1/p (tiny slack keeps sampling robust)
    while not lo + p - 1 - 1.0 / p - hi > 1e-9 * (1.0 + abs(lo) + abs(hi)):
        p += 1
    c2 = 0.5 * (hi + lo + p - 1 - 1.0 / p)
    c1 = 1.0 / (p * p * (c2 - lo) ** p)
    return c1, c2, p


def phi_constants(b, mode="positive", samples=10 ** 4):
    """Constants c1, c2, p for the gradient-estimate weight on [lower, upper].

    Positive mode: phi = c1 (c2 - s)^p with phi' < 0 and
    phi'' - phi'^2 + phi' > 0.  Negative mode: phi = c1 (c2 + s)^p with
    phi' > 0 and phi'' - phi'^2 - phi' > 0, obtained from the positive
    construction on the mirrored interval.
    """
    lo, hi = b.lower, b.upper
    if mode == "positive":
        c1, c2, p = _positive_constants(lo, hi)
    elif mode == "negative":
        c1, c2, p = _positive_constants(-hi, -lo)
    else:
        raise DomainError(f"unknown phi mode {mode!r}")
    pc = PhiConstants(c1, c2, p, mode, lo, hi)
    ok, m1, m2 = pc.check(samples)
    if not ok:
        raise RuntimeError(f"phi constants failed verification ({m1:.3e}, {m2:.3e})")
    return pc


# -- determinant equation -----------------------------------------------------

def lambda_max(S):
    return float(np.linalg.eigvalsh(S.flat())[:, -1].max())


def harnack_gap(S, D):
    """2 log cos(D sqrt(lambda_max(S)/2)); requires lambda_max D^2 < pi^2/2."""
    lam = lambda_max(S)
    if lam * D * D >= HALF_PI_SQ:
        raise HarnackInfeasible(
            f"lambda_max(S) D^2 = {lam * D * D:.6g} >= pi^2/2")
    return 2.0 * math.log(math.cos(D * math.sqrt(max(lam, 0.0) / 2.0)))


@dataclass
class HarnackReport:
    passed: bool
    feasible: bool
    gap: float
    oscillation: float
    slack: float
    note: str = ""

    def to_record(self):
        return dict(check="harnack", **asdict(self))


def verify_harnack(u, S, D):
    """gap + sup u < inf u, reported with slack = inf u - sup u - gap."""
    osc = u.max() - u.min()
    try:
        gap = harnack_gap(S, D)
    except HarnackInfeasible as exc:
        return HarnackReport(False, False, float("nan"), osc, float("nan"), str(exc))
    slack = -gap - osc
    note = "" if slack > 0 else "not a solution: oscillation exceeds the Harnack gap"
    return HarnackReport(slack > 0, True, gap, osc, slack, note)


@dataclass
class ConvexityReport:
    passed: bool
    min_eigenvalue: float
    failures: int
    first_failure: list

    def to_record(self):
        return dict(check="v_convexity", **asdict(self))


def verify_v_convexity(u, S):
    """nabla^2 v + v S / 2 positive definite at every point, v = e^{u/2}."""
    grid = u.grid
    d = grid.dim
    v = np.exp(0.5 * u.values)
    Q = hess_array(v, grid.spacing) + 0.5 * v[..., None, None] * S.values
    lam = np.linalg.eigvalsh(Q.reshape(-1, d, d))[:, 0]
    bad = lam <= 0
    first = _index(np.argmax(bad), grid.shape) if bad.any() else []
    return ConvexityReport(not bad.any(), float(lam.min()), int(bad.sum()), first)


@dataclass
class MeanReport:
    passed: bool
    min_point_slack: float
    max_point_slack: float

    def to_record(self):
        return dict(check="normalized_mean", **asdict(self))


def verify_mean_bounds(u, S, rhs, mean_value):
    """Min/max-point test for det^{1/n}(... + S) = rhs e^{-<u>}.

    At a minimum q of u: det^{1/n}(S(q)) <= rhs(q) e^{-<u>}; at a maximum the
    reverse holds.
    """
    n = u.grid.dim
    root = evaluate_batch(S.flat(), n, 1.0).root
    vals = u.values.ravel()
    r = rhs.values.ravel() * math.exp(-mean_value)
    q, p = int(np.argmin(vals)), int(np.argmax(vals))
    smin = float(r[q] - root[q])
    smax = float(root[p] - r[p])
    return MeanReport(smin >= 0 and smax >= 0, smin, smax)


# -- monitored quantities -------------------------------------------------------

def diagnostics(u, p):
    """sup |du|, max top eigenvalue of nabla^2 u + du (x) du + S, max sigma_{k-1}."""
    grid = u.grid
    d = grid.dim
    sp = grid.spacing
    g = grad_array(u.values, sp)
    H = hess_array(u.values, sp)
    E = H + p.sgn * g[..., :, None] * g[..., None, :] + p.S.values
    top = np.linalg.eigvalsh(E.reshape(-1, d, d))[:, -1]
    M = augmented_array(H, g, p.S.values, p.sgn).reshape(-1, d, d)
    if p.k == 1:
        skm1 = 1.0
    else:
        skm1 = float(newton_batch(M, p.k - 1)[0][:, p.k - 1].max())
    return {
        "grad_sup": float(np.sqrt(np.einsum("...i,...i->...", g, g)).max()),
        "hess_eig_max": float(top.max()),
        "sigma_km1_max": skm1,
    }


def harnack_ode_check(profiles=50, seed=0, samples=400):
    """Comparison step of the Harnack argument on random 1-D profiles.

    Each profile solves v'' + alpha v = g(t) > 0 with v(0) = M, v'(0) = 0 and
    must stay above w = M cos(sqrt(alpha) t) for 0 < sqrt(alpha) t < pi/2.
    Returns (number passing, smallest relative margin).
    """
    from scipy.integrate import solve_ivp

    rng = np.random.default_rng(seed)
    passed = 0
    worst = math.inf
    for _ in range(profiles):
        alpha = rng.uniform(0.05, 3.0)
        M = rng.uniform(0.2, 3.0)
        c0 = rng.uniform(1e-3, 0.5)
        amps = rng.uniform(0.0, 1.0, 3)
        freqs = rng.uniform(0.1, 5.0, 3)
        phases = rng.uniform(0.0, 2 * math.pi, 3)

        def forcing(t):
            return c0 + np.sum(amps * (1.0 + np.cos(freqs * t + phases)))

        def rhs(t, y):
            return [y[1], -alpha * y[0] + forcing(t)]

        T = (math.pi / 2) / math.sqrt(alpha)
        ts = np.linspace(0.0, T, samples + 2)[1:-1]
        sol = solve_ivp(rhs, (0.0, T), [M, 0.0], t_eval=ts, method="DOP853",
                        rtol=1e-11, atol=1e-13)
        w = M * np.cos(math.sqrt(alpha) * ts)
        margin = (sol.y[0] - w) / M
        worst = min(worst, float(margin.min()))
        passed += bool(np.all(sol.y[0] > w))
    return passed, worst


# -- model spaces -----------------------------------------------------------------

def model_rows():
    """Sphere(3..8), RealProjective(3..8), ComplexProjective(2..4)."""
    rows = []
    models = ([ModelGeometry.sphere(n) for n in range(3, 9)]
              + [ModelGeometry.real_projective(n) for n in range(3, 9)]
              + [ModelGeometry.complex_projective(m) for m in range(2, 5)])
    for m in models:
        a, D, inv = model_schouten(m)
        if m.kind == "Sphere":
            expected = math.pi ** 2 / 2
        elif m.kind == "RealProjective":
            expected = math.pi ** 2 / 8
        else:
            expected = (m.param + 1) / (2 * m.param - 1) * math.pi ** 2 / 4
        rows.append({
            "model": m.label,
            "real_dim": m.real_dim,
            "ricci_multiple": m.ricci_multiple,
            "scalar_curv": m.scalar_curv,
            "schouten_multiple": a,
            "diameter": D,
            "invariant": inv,
            "expected": expected,
            "feasible": inv < HALF_PI_SQ,
        })
    return rows
