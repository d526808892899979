"""Pure numpy implementations of the batched kernels.

These mirror ``_kernels.pyx`` in signature and agree with it to rounding;
the compiled module is only a speed-up.
"""
import numpy as np


def newton_batch(A, k):
    """Elementary symmetric functions and the (k-1)th Newton transformation.

    Parameters
    ----------
    A : ndarray, shape (N, n, n)
        Batch of symmetric matrices.
    k : int
        Order, ``1 <= k <= n``.

    Returns
    -------
    sig : ndarray, shape (N, k + 1)
        ``sig[:, j]`` is sigma_j of each matrix (``sig[:, 0] == 1``).
    T : ndarray, shape (N, n, n)
        ``T_{k-1}`` of each matrix.
    """
    A = np.ascontiguousarray(A, dtype=np.float64)
    N, n, _ = A.shape
    sig = np.empty((N, k + 1))
    sig[:, 0] = 1.0
    eye = np.eye(n)
    T = np.broadcast_to(eye, A.shape).copy()
    for q in range(1, k + 1):
        AT = A @ T
        s = np.trace(AT, axis1=1, axis2=2) / q
        sig[:, q] = s
        if q < k:
            T = s[:, None, None] * eye - AT
    return sig, T


def esp_batch(lam, k):
    """sigma_0..sigma_k of each row of ``lam`` by the prefix recurrence."""
    lam = np.ascontiguousarray(lam, dtype=np.float64)
    N, n = lam.shape
    e = np.zeros((N, k + 1))
    e[:, 0] = 1.0
    for i in range(n):
        x = lam[:, i]
        for j in range(min(i + 1, k), 0, -1):
            e[:, j] += x * e[:, j - 1]
    return e
