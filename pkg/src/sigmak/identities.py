"""Randomized audit of the sigma_k / Newton-transformation identities.

Reference values of sigma_k come from sums of principal k x k minors in long
double, a route independent of both the trace recurrence and eigenvalues.
Cone membership is cross-checked against a segment characterization:
lambda is in Gamma_k iff sigma_k stays positive on the segment from lambda to
a point of the positive ray.
"""
from dataclasses import asdict, dataclass, field
from itertools import combinations

import numpy as np

from .kernels import esp_batch, newton_batch
from .symfunc import CONE_TOL

FD_STEP = 1e-5
FD_TOL = 1e-6
REL_TOL = 1e-10
SLACK = 1e-10
RAY_SAMPLES = 64
FAULTS = ("newton_sign",)


@dataclass
class IdentityResult:
    identity: str
    checked: int = 0
    violations: int = 0
    worst_error: float = 0.0
    tolerance: float = 0.0
    worst_case: dict = field(default_factory=dict)
    counterexample: list = None

    @property
    def passed(self):
        return self.violations == 0

    def update(self, err, limit, mats, n, k):
        """Fold per-sample errors ``err`` against per-sample limits ``limit``."""
        err = np.asarray(err, dtype=np.float64)
        if err.size == 0:
            return
        self.checked += err.size
        excess = err - limit
        bad = excess > 0
        self.violations += int(bad.sum())
        i = int(np.argmax(err))
        if err[i] > self.worst_error:
            self.worst_error = float(err[i])
            self.worst_case = {"n": n, "k": k}
        if bad.any() and self.counterexample is None:
            j = int(np.argmax(excess))
            self.counterexample = np.asarray(mats[j], dtype=np.float64).tolist()
            self.worst_case = {"n": n, "k": k}

    def to_record(self):
        rec = asdict(self)
        rec["passed"] = self.passed
        return rec


# -- oracle --------------------------------------------------------------------

def _det_ld(A):
    """Batched determinant by Gaussian elimination with partial pivoting."""
    A = A.copy()
    N, m, _ = A.shape
    det = np.ones(N, dtype=np.longdouble)
    rows = np.arange(N)
    for c in range(m):
        piv = c + np.argmax(np.abs(A[:, c:, c]), axis=1)
        swap = piv != c
        if swap.any():
            tmp = A[rows, c].copy()
            A[rows, c] = A[rows, piv]
            A[rows, piv] = tmp
            det[swap] = -det[swap]
        d = A[:, c, c]
        det *= d
        safe = np.where(d == 0, 1, d)
        if c + 1 < m:
            f = A[:, c + 1:, c] / safe[:, None]
            A[:, c + 1:, c:] -= f[:, :, None] * A[:, c, None, c:]
    return det


def minor_sigma(A, k):
    """sigma_k as the sum of principal k x k minors, in long double."""
    A = np.asarray(A, dtype=np.longdouble)
    n = A.shape[-1]
    if k == 0:
        return np.ones(A.shape[0], dtype=np.longdouble)
    total = np.zeros(A.shape[0], dtype=np.longdouble)
    for idx in combinations(range(n), k):
        ix = np.array(idx)
        total += _det_ld(A[:, ix[:, None], ix[None, :]])
    return total


def segment_in_cone(lam, k, samples=RAY_SAMPLES):
    """Cone test by positivity of sigma_k along the segment to the ray.

    The ray point c (1, ..., 1) with c = 1 + max |lambda_i| lies in the
    positive cone; Gamma_k is convex, so lambda belongs to it iff the whole
    segment stays in {sigma_k > 0}.
    """
    lam = np.asarray(lam, dtype=np.float64)
    n = lam.shape[1]
    c = 1.0 + np.abs(lam).max(axis=1)
    ok = np.ones(lam.shape[0], dtype=bool)
    for s in np.linspace(0.0, 1.0, samples + 1):
        pts = (1.0 - s) * lam + s * c[:, None] * np.ones(n)
        sk = esp_batch(pts, k)[:, k]
        scale = np.sqrt(np.sum(pts * pts, axis=1)) ** k
        ok &= sk > CONE_TOL * scale
    return ok


# -- samplers -------------------------------------------------------------------

def random_symmetric(rng, count, n, low=-5.0, high=5.0):
    X = rng.uniform(low, high, size=(count, n, n))
    upper = np.triu(X)
    return upper + np.swapaxes(np.triu(X, 1), 1, 2)


def random_orthogonal(rng, count, n):
    G = rng.standard_normal((count, n, n))
    Q, R = np.linalg.qr(G)
    return Q * np.sign(np.diagonal(R, axis1=1, axis2=2))[:, None, :]


def _inside(M, k):
    sig = newton_batch(M, k)[0]
    norms = np.sqrt(np.einsum("pij,pij->p", M, M))
    return np.all(sig[:, 1:] > CONE_TOL * norms[:, None] ** np.arange(1, k + 1), axis=1)


def random_in_cone(rng, count, n, k):
    """``count`` matrices of Gamma_k^+ built as Q diag(lambda) Q^T."""
    out = []
    have = 0
    while have < count:
        m = 4 * (count - have) + 8
        lam = rng.uniform(-5.0, 5.0, size=(m, n)) + rng.uniform(0.0, 5.0, size=(m, 1))
        lam = lam[np.all(esp_batch(lam, k)[:, 1:] > 0, axis=1)]
        Q = random_orthogonal(rng, lam.shape[0], n)
        A = np.einsum("pij,pj,pkj->pik", Q, lam, Q)
        A = 0.5 * (A + np.swapaxes(A, 1, 2))
        A = A[_inside(A, k)]
        out.append(A[:count - have])
        have += out[-1].shape[0]
    return np.concatenate(out)


def _faulty_newton(A, k):
    """Trace recurrence with the sign of the A T_{q-1} term flipped."""
    N, n, _ = A.shape
    eye = np.eye(n)
    sig = np.zeros((N, k + 1))
    sig[:, 0] = 1.0
    T = np.broadcast_to(eye, A.shape).copy()
    for q in range(1, k + 1):
        AT = A @ T
        s = np.trace(AT, axis1=1, axis2=2) / q
        sig[:, q] = s
        if q < k:
            T = s[:, None, None] * eye + AT
    return sig, T


# -- suite ----------------------------------------------------------------------

NAMES = ("Euler identity", "trace identity", "derivative identity", "cone inclusion",
         "concavity", "positive definiteness", "monotonicity", "eigenvalue bound")


def _eigen_envelope(rng, n, k, target, max_rounds=200):
    """Max |lambda| over ``target`` samples with sigma_k >= 1, sigma_{k-1} <= 10.

    A draw in Gamma_k is rescaled by c with c^k sigma_k >= 1 and
    c^{k-1} sigma_{k-1} <= 10, c uniform on the admissible interval in log scale.
    """
    got = 0
    worst = 0.0
    rounds = 0
    while got < target and rounds < max_rounds:
        m = 2 * (target - got) + 64
        lam = rng.uniform(-6.0, 6.0, size=(m, n)) + rng.uniform(0.0, 3.0, size=(m, 1))
        e = esp_batch(lam, k)
        ok = np.all(e[:, 1:] > 0, axis=1)
        lam, e = lam[ok], e[ok]
        lo = -np.log(e[:, k]) / k
        hi = np.log(10.0 / e[:, k - 1]) / (k - 1)
        ok = lo <= hi
        lam, lo, hi = lam[ok], lo[ok], hi[ok]
        c = np.exp(lo + rng.uniform(0.0, 1.0, lo.shape) * (hi - lo))
        lam = (c[:, None] * lam)[:target - got]
        e = esp_batch(lam, k)
        # rounding may push a rescaled sample just outside the constraint set
        keep = (e[:, k] >= 1.0 - 1e-12) & (e[:, k - 1] <= 10.0 + 1e-11)
        lam = lam[keep]
        if lam.size:
            worst = max(worst, float(np.abs(lam).max()))
        got += lam.shape[0]
        rounds += 1
    return got, worst


def run_suite(n_range=(2, 6), trials=1000, seed=42, fault=None):
    """Run every identity for n in n_range (inclusive) and 1 <= k <= n.

    Returns a list of :class:`IdentityResult`, empty when ``trials`` is 0.
    """
    if fault is not None and fault not in FAULTS:
        raise ValueError(f"unknown fault {fault!r}")
    if trials <= 0:
        return []
    newton = _faulty_newton if fault == "newton_sign" else newton_batch
    rng = np.random.default_rng(seed)
    res = {name: IdentityResult(name) for name in NAMES}
    res["Euler identity"].tolerance = REL_TOL
    res["trace identity"].tolerance = REL_TOL
    res["derivative identity"].tolerance = FD_TOL
    res["concavity"].tolerance = SLACK
    res["monotonicity"].tolerance = SLACK
    ts = np.linspace(0.0, 1.0, 11)
    for n in range(n_range[0], n_range[1] + 1):
        for k in range(1, n + 1):
            A = random_symmetric(rng, trials, n)
            sig, T = newton(A, k)
            ref_k = minor_sigma(A, k)
            ref_km1 = minor_sigma(A, k - 1)

            euler = np.einsum("pij,pij->p", T, A)
            err = np.abs(euler - k * ref_k).astype(np.float64)
            res["Euler identity"].update(err, REL_TOL * (1 + np.abs(ref_k).astype(float)), A, n, k)

            tr = np.trace(T, axis1=1, axis2=2)
            err = np.abs(tr - (n - k + 1) * ref_km1).astype(np.float64)
            res["trace identity"].update(err, REL_TOL * (1 + np.abs(ref_km1).astype(float)), A, n, k)

            B = random_symmetric(rng, trials, n, -1.0, 1.0)
            Al = A.astype(np.longdouble)
            Bl = B.astype(np.longdouble)
            h = np.longdouble(FD_STEP)
            fd = (minor_sigma(Al + h * Bl, k) - minor_sigma(Al - h * Bl, k)) / (2 * h)
            err = np.abs(np.einsum("pij,pij->p", T, B) - fd).astype(np.float64)
            res["derivative identity"].update(err, FD_TOL, A, n, k)

            if k >= 2:
                ins = _inside(A, k)
                lam = np.linalg.eigvalsh(A[ins])
                seg = segment_in_cone(lam, k - 1)
                res["cone inclusion"].update((~seg).astype(float), 0.0, A[ins], n, k)

            C = random_in_cone(rng, 2 * trials, n, k)
            P, Q = C[:trials], C[trials:]
            if k >= 2:
                seg = segment_in_cone(np.linalg.eigvalsh(P), k - 1)
                res["cone inclusion"].update((~seg).astype(float), 0.0, P, n, k)
            sig, T = newton(P, k)
            lam_T = np.linalg.eigvalsh(T)[:, 0]
            res["positive definiteness"].update((lam_T <= 0).astype(float), 0.0, P, n, k)

            def root(M):
                return np.maximum(newton(M, k)[0][:, k], 0.0) ** (1.0 / k)

            rP, rQ = root(P), root(Q)
            for t in ts:
                mix = (1 - t) * P + t * Q
                gap = (1 - t) * rP + t * rQ - root(mix)
                res["concavity"].update(np.maximum(gap, 0.0), SLACK, P, n, k)

            G = rng.standard_normal((trials, n, n))
            psd = (G @ np.swapaxes(G, 1, 2)) * rng.uniform(0.0, 1.0, (trials, 1, 1)) / n
            sum_ = P + psd
            keep = _inside(sum_, k)
            drop = newton(P[keep], k)[0][:, k] - newton(sum_[keep], k)[0][:, k]
            res["monotonicity"].update(np.maximum(drop, 0.0), SLACK, P[keep], n, k)

            if k >= 2:
                got, worst = _eigen_envelope(rng, n, k, 100 * trials)
                r = res["eigenvalue bound"]
                r.checked += got
                if not np.isfinite(worst):
                    r.violations += 1
                if worst > r.worst_error:
                    r.worst_error = worst
                    r.worst_case = {"n": n, "k": k, "samples": got}
    res["eigenvalue bound"].tolerance = None
    return [res[name] for name in NAMES]
