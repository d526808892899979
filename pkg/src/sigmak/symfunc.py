"""Elementary symmetric functions, Newton transformations and Garding cones.

Everything here acts on small dense symmetric matrices (n <= 8).  The
``*_batch`` helpers take stacks of shape (N, n, n) and are what the grid code
calls; the scalar functions are thin wrappers around them.
"""
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NotAdmissible
from .kernels import newton_batch

CONE_TOL = 1e-13
SEGMENT_SAMPLES = 32
MAX_DIM = 8


def as_symmat(A):
    """Validate ``A`` as a symmetric matrix and return it as float64."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {A.shape}")
    if not 1 <= A.shape[0] <= MAX_DIM:
        raise DomainError(f"matrix dimension {A.shape[0]} outside 1..{MAX_DIM}")
    if not np.array_equal(A, A.T):
        raise DomainError("matrix is not symmetric")
    return A


def sigma(lam, k):
    """k-th elementary symmetric polynomial of the entries of ``lam``.

    Uses the prefix recurrence e_j <- e_j + x * e_{j-1}; sigma(., 0) = 1.
    """
    lam = np.asarray(lam, dtype=np.float64).ravel()
    if not 0 <= k <= lam.size:
        raise DomainError(f"k={k} outside 0..{lam.size}")
    e = np.zeros(k + 1)
    e[0] = 1.0
    for i, x in enumerate(lam):
        for j in range(min(i + 1, k), 0, -1):
            e[j] += x * e[j - 1]
    return float(e[k])


def sigma_mat(A, k, method="charpoly"):
    """sigma_k of the eigenvalues of ``A``.

    ``method="charpoly"`` reads it off the characteristic polynomial via the
    trace recurrence; ``method="eig"`` goes through :func:`eigen_sym`.
    """
    A = as_symmat(A)
    n = A.shape[0]
    if not 0 <= k <= n:
        raise DomainError(f"k={k} outside 0..{n}")
    if k == 0:
        return 1.0
    if method == "charpoly":
        sig, _ = newton_batch(A[None], k)
        return float(sig[0, k])
    if method == "eig":
        return sigma(eigen_sym(A), k)
    raise ValueError(f"unknown method {method!r}")


def newton_transform(A, q):
    """q-th Newton transformation T_q(A).

    T_0 = I and T_q = sigma_q(A) I - A T_{q-1}, with
    sigma_q(A) = tr(A T_{q-1}) / q.
    """
    A = as_symmat(A)
    n = A.shape[0]
    if not 0 <= q <= n:
        raise DomainError(f"q={q} outside 0..{n}")
    eye = np.eye(n)
    T = eye.copy()
    for j in range(1, q + 1):
        AT = A @ T
        T = (np.trace(AT) / j) * eye - AT
    # products of commuting symmetric matrices are symmetric up to rounding
    return 0.5 * (T + T.T)


def eigen_sym(A, tol=1e-14, max_sweeps=64):
    """Eigenvalues of a small symmetric matrix by cyclic Jacobi rotations.

    Sweeps until the off-diagonal Frobenius norm is below ``tol * ||A||_F``.
    Returned sorted in descending order.
    """
    a = as_symmat(A).copy()
    n = a.shape[0]
    scale = np.linalg.norm(a)
    if scale == 0.0:
        return np.zeros(n)
    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-18 * scale:
                    # negligible entry; rotating would only overflow theta
                    a[p, q] = a[q, p] = 0.0
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.copysign(1.0, theta) / (abs(theta) + np.hypot(theta, 1.0))
                c = 1.0 / np.hypot(t, 1.0)
                s = t * c
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                a[p, q] = a[q, p] = 0.0
    return np.sort(np.diag(a))[::-1].copy()


@dataclass(frozen=True)
class ConeSpec:
    """Which cone to test: Gamma_k^+ (t=1), its homotopy blend (t<1), or
    the mirrored Gamma_k^- (sign='negative')."""

    k: int
    sign: str = "positive"
    t: float = 1.0

    def __post_init__(self):
        if self.k < 1:
            raise DomainError("cone order k must be >= 1")
        if self.sign not in ("positive", "negative"):
            raise DomainError(f"unknown cone sign {self.sign!r}")
        if not 0.0 <= self.t <= 1.0:
            raise DomainError("homotopy parameter t must lie in [0, 1]")


@dataclass
class BatchEval:
    """Pointwise data for a stack of matrices at cone order k and blend t."""

    sig: np.ndarray         # (N, k+1): sigma_0..sigma_k
    T: np.ndarray           # (N, n, n): T_{k-1}
    inside: np.ndarray      # (N,): in Gamma_k^+
    admissible: np.ndarray  # (N,): in Gamma_{k,t}^+
    value: np.ndarray       # (N,): t sigma_k^{1/k} + (1-t) sigma_1
    root: np.ndarray        # (N,): sigma_k^{1/k} on Gamma_k^+, 0 elsewhere
    fail_order: np.ndarray  # (N,): first failing j, 0 for the blend, -1 if ok


def _thresholds(M, k):
    norms = np.sqrt(np.einsum("pij,pij->p", M, M))
    return CONE_TOL * norms[:, None] ** np.arange(1, k + 1)


def _gamma_k(M, k):
    sig, T = newton_batch(M, k)
    pos = sig[:, 1:] > _thresholds(M, k)
    inside = np.all(pos, axis=1)
    root = np.zeros(M.shape[0])
    root[inside] = sig[inside, k] ** (1.0 / k)
    return sig, T, pos, inside, root


def evaluate_batch(M, k, t=1.0):
    """Cone membership, sigma values and the blended operator for a stack.

    For t < 1 a point is admissible when sigma_1 > 0 and the blend stays
    positive along the segment from M to sigma_1(M) I / n, sampled at
    s = 0, 1/32, ..., 1; the sigma_k^{1/k} term only counts at samples that
    lie in Gamma_k^+.
    """
    M = np.ascontiguousarray(M, dtype=np.float64)
    N, n, _ = M.shape
    if not 1 <= k <= n:
        raise DomainError(f"k={k} outside 1..{n}")
    sig, T, pos, inside, root = _gamma_k(M, k)
    fail_order = np.full(N, -1, dtype=np.int64)
    if t >= 1.0:
        admissible = inside
        value = root.copy()
        bad = ~inside
        fail_order[bad] = 1 + np.argmin(pos[bad], axis=1)
    else:
        s1 = sig[:, 1]
        value = t * root + (1.0 - t) * s1
        admissible = s1 > CONE_TOL * np.sqrt(np.einsum("pij,pij->p", M, M))
        fail_order[~admissible] = 1
        ray = (s1 / n)[:, None, None] * np.eye(n)
        for i in range(SEGMENT_SAMPLES + 1):
            s = i / SEGMENT_SAMPLES
            B = (1.0 - s) * M + s * ray
            sB, _, _, _, rB = _gamma_k(B, k)
            fB = t * rB + (1.0 - t) * sB[:, 1]
            ok = fB > CONE_TOL * np.sqrt(np.einsum("pij,pij->p", B, B))
            newly = admissible & ~ok
            fail_order[newly] = 0
            admissible = admissible & ok
    return BatchEval(sig, T, inside, admissible, value, root, fail_order)


def _signed(A, cone):
    A = as_symmat(A)
    if cone.k > A.shape[0]:
        raise DomainError(f"k={cone.k} exceeds dimension {A.shape[0]}")
    return -A if cone.sign == "negative" else A


def in_cone(A, cone):
    """True iff ``A`` lies strictly inside the cone described by ``cone``."""
    B = _signed(A, cone)
    ev = evaluate_batch(B[None], cone.k, cone.t)
    return bool(ev.admissible[0])


def sigma_k_root(A, cone):
    """sigma_k(A)^{1/k}, or t sigma_k^{1/k} + (1-t) sigma_1 for t < 1.

    For the negative cone the value is computed for -A.  Raises
    :class:`NotAdmissible` outside the cone.
    """
    B = _signed(A, cone)
    ev = evaluate_batch(B[None], cone.k, cone.t)
    if not ev.admissible[0]:
        j = int(ev.fail_order[0])
        val = float(ev.sig[0, j]) if j > 0 else float(ev.value[0])
        raise NotAdmissible(f"matrix outside cone (order {j}, value {val:.3e})",
                            order=j, value=val)
    return float(ev.value[0])
