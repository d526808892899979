# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled batched kernels; see ``_fallback.py`` for the reference versions."""
import numpy as np
cimport numpy as cnp

cnp.import_array()

DEF NMAX = 8


def newton_batch(A, int k):
    cdef const double[:, :, ::1] a = np.ascontiguousarray(A, dtype=np.float64)
    cdef Py_ssize_t N = a.shape[0]
    cdef Py_ssize_t n = a.shape[1]
    if n > NMAX:
        raise ValueError("matrix dimension above %d" % NMAX)
    if k < 1 or k > n:
        raise ValueError("k out of range")
    sig_arr = np.empty((N, k + 1), dtype=np.float64)
    T_arr = np.empty((N, n, n), dtype=np.float64)
    cdef double[:, ::1] sig = sig_arr
    cdef double[:, :, ::1] Tout = T_arr
    cdef double T[NMAX][NMAX]
    cdef double AT[NMAX][NMAX]
    cdef double s, acc
    cdef Py_ssize_t p, q, i, j, l
    with nogil:
        for p in range(N):
            for i in range(n):
                for j in range(n):
                    T[i][j] = 1.0 if i == j else 0.0
            sig[p, 0] = 1.0
            for q in range(1, k + 1):
                for i in range(n):
                    for j in range(n):
                        acc = 0.0
                        for l in range(n):
                            acc = acc + a[p, i, l] * T[l][j]
                        AT[i][j] = acc
                s = 0.0
                for i in range(n):
                    s = s + AT[i][i]
                s = s / q
                sig[p, q] = s
                if q < k:
                    for i in range(n):
                        for j in range(n):
                            T[i][j] = -AT[i][j]
                        T[i][i] = T[i][i] + s
            for i in range(n):
                for j in range(n):
                    Tout[p, i, j] = T[i][j]
    return sig_arr, T_arr


def esp_batch(lam, int k):
    cdef const double[:, ::1] x = np.ascontiguousarray(lam, dtype=np.float64)
    cdef Py_ssize_t N = x.shape[0]
    cdef Py_ssize_t n = x.shape[1]
    out = np.zeros((N, k + 1), dtype=np.float64)
    cdef double[:, ::1] e = out
    cdef Py_ssize_t p, i, j, top
    with nogil:
        for p in range(N):
            e[p, 0] = 1.0
            for i in range(n):
                top = i + 1 if i + 1 < k else k
                for j in range(top, 0, -1):
                    e[p, j] = e[p, j] + x[p, i] * e[p, j - 1]
    return out
