# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Same algorithm as ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, copysign, isnan, NAN

cnp.import_array()

NAME = "cython"


cdef int _qr_solve(double[:, ::1] A, double[::1] b, double[::1] scale,
                   double[::1] pivots, double[::1] beta, double tol) noexcept nogil:
    """In-place Householder QR of ``A`` (n x q) and solve against ``b``.

    ``A`` holds the raw design on entry and the normalized R factor in its
    upper triangle on exit. Returns the first rank-deficient column or -1.
    """
    cdef Py_ssize_t n = A.shape[0], q = A.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double s, norm, alpha, a0, vtv, dot, f

    for j in range(q):
        s = 0.0
        for i in range(n):
            s += A[i, j] * A[i, j]
        scale[j] = sqrt(s)
        if scale[j] == 0.0:
            return <int>j
    for i in range(n):
        for j in range(q):
            A[i, j] /= scale[j]

    for k in range(q):
        s = 0.0
        for i in range(k, n):
            s += A[i, k] * A[i, k]
        norm = sqrt(s)
        a0 = A[k, k]
        alpha = -copysign(norm, a0)
        pivots[k] = alpha * alpha
        if pivots[k] < tol:
            return <int>k
        vtv = 2.0 * (norm * norm + fabs(a0) * norm)
        A[k, k] = a0 - alpha
        for j in range(k + 1, q):
            dot = 0.0
            for i in range(k, n):
                dot += A[i, k] * A[i, j]
            f = 2.0 * dot / vtv
            for i in range(k, n):
                A[i, j] -= f * A[i, k]
        dot = 0.0
        for i in range(k, n):
            dot += A[i, k] * b[i]
        f = 2.0 * dot / vtv
        for i in range(k, n):
            b[i] -= f * A[i, k]
        A[k, k] = alpha
        for i in range(k + 1, n):
            A[i, k] = 0.0

    for k in range(q - 1, -1, -1):
        s = b[k]
        for j in range(k + 1, q):
            s -= A[k, j] * beta[j]
        beta[k] = s / A[k, k]
    for k in range(q):
        beta[k] /= scale[k]
    return -1


def householder_lstsq(W, y, double tol):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] W0 = np.ascontiguousarray(W, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] y0 = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t n = W0.shape[0], q = W0.shape[1]
    A_arr = W0.copy()
    b_arr = y0.copy()
    scale_arr = np.zeros(q)
    pivots_arr = np.zeros(q)
    beta_arr = np.full(q, np.nan)
    cdef double[:, ::1] A = A_arr
    cdef double[::1] b = b_arr, scale = scale_arr, pivots = pivots_arr, beta = beta_arr
    cdef int bad
    with nogil:
        bad = _qr_solve(A, b, scale, pivots, beta, tol)
    if bad >= 0:
        return np.full(q, np.nan), np.full(n, np.nan), np.zeros((q, q)), pivots_arr, bad
    r = np.triu(A_arr[:q]) * scale_arr
    residuals = y0 - W0 @ beta_arr
    return beta_arr, residuals, r, pivots_arr, -1


def replicate_estimates(y, t, X, double mcm_center, double tol):
    cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef double[::1] tv = np.ascontiguousarray(t, dtype=np.float64)
    cdef double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef Py_ssize_t n = Xv.shape[0], d = Xv.shape[1]
    cdef Py_ssize_t i, j
    cdef double treated = 0.0, p, c, acc
    out_arr = np.full(3, np.nan)
    cdef double[::1] out = out_arr

    for i in range(n):
        treated += tv[i]
    if treated == 0.0 or treated == <double>n:
        return out_arr
    p = treated / n
    c = p if isnan(mcm_center) else mcm_center

    cdef double[:, ::1] A2 = np.empty((n, 2))
    cdef double[:, ::1] A3 = np.empty((n, d + 2))
    cdef double[:, ::1] A4 = np.empty((n, d + 1))
    cdef double[::1] b = np.empty(n)
    cdef double[::1] scale = np.empty(d + 2)
    cdef double[::1] pivots = np.empty(d + 2)
    cdef double[::1] beta = np.empty(d + 2)
    cdef double[::1] xbar = np.zeros(d)

    with nogil:
        for i in range(n):
            A2[i, 0] = tv[i] - p
            A2[i, 1] = 1.0
            b[i] = yv[i]
        if _qr_solve(A2, b, scale[:2], pivots[:2], beta[:2], tol) < 0:
            out[0] = beta[0]

        for i in range(n):
            A3[i, 0] = tv[i] - p
            for j in range(d):
                A3[i, j + 1] = Xv[i, j]
            A3[i, d + 1] = 1.0
            b[i] = yv[i]
        if _qr_solve(A3, b, scale, pivots, beta, tol) < 0:
            out[1] = beta[0]

        for i in range(n):
            for j in range(d):
                A4[i, j] = (tv[i] - c) * Xv[i, j]
                xbar[j] += Xv[i, j]
            A4[i, d] = 1.0
            b[i] = yv[i]
        if _qr_solve(A4, b, scale[:d + 1], pivots[:d + 1], beta[:d + 1], tol) < 0:
            acc = 0.0
            for j in range(d):
                acc += (xbar[j] / n) * beta[j]
            out[2] = acc
    return out_arr
