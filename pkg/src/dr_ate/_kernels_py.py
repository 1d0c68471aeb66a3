"""Pure numpy implementation of the hot kernels.

Mirrors ``_kernels.pyx`` step for step (column-normalized Householder QR), so
the two backends agree to rounding error. Used when the compiled extension is
unavailable or when ``DR_ATE_BACKEND=python``.
"""

import numpy as np

NAME = "python"


def householder_lstsq(W, y, tol):
    """Least squares via Householder QR on the column-normalized design.

    Returns ``(beta, residuals, r, pivots, bad)`` where ``r`` is the upper
    triangular factor of the *unscaled* ``W``, ``pivots[k]`` is the squared
    diagonal of the normalized factor (1 minus the R^2 of column k on the
    columns before it) and ``bad`` is the first column with a pivot below
    ``tol`` (-1 if none). When ``bad >= 0``, ``beta`` and ``residuals`` are NaN.
    """
    W = np.ascontiguousarray(W, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n, q = W.shape
    scale = np.sqrt(np.einsum("ij,ij->j", W, W))
    pivots = np.zeros(q)
    r = np.zeros((q, q))
    beta = np.full(q, np.nan)
    if np.any(scale == 0.0):
        bad = int(np.flatnonzero(scale == 0.0)[0])
        return beta, np.full(n, np.nan), r, pivots, bad
    A = W / scale
    b = y.copy()
    for k in range(q):
        col = A[k:, k]
        norm = np.sqrt(col @ col)
        alpha = -np.copysign(norm, col[0])
        pivots[k] = alpha * alpha
        if pivots[k] < tol:
            return beta, np.full(n, np.nan), r, pivots, k
        v = col.copy()
        v[0] -= alpha
        vtv = 2.0 * (norm * norm + abs(col[0]) * norm)
        if k + 1 < q:
            block = A[k:, k + 1:]
            block -= np.outer(v, (2.0 / vtv) * (v @ block))
        b[k:] -= v * ((2.0 / vtv) * (v @ b[k:]))
        A[k, k] = alpha
        A[k + 1:, k] = 0.0
    rs = np.triu(A[:q])
    beta_s = np.empty(q)
    for k in range(q - 1, -1, -1):
        beta_s[k] = (b[k] - rs[k, k + 1:] @ beta_s[k + 1:]) / rs[k, k]
    beta = beta_s / scale
    r = rs * scale
    residuals = y - W @ beta
    return beta, residuals, r, pivots, -1


def replicate_estimates(y, t, X, mcm_center, tol):
    """SLR, MLR and MCM ATE estimates for one replication.

    ``X`` is ``(n, d)`` with ``d >= 1``. ``mcm_center`` is the probability used
    to center the modified covariates; NaN means the empirical treated
    fraction. Failed estimators (all treated, none treated, rank deficient)
    come back as NaN.
    """
    y = np.ascontiguousarray(y, dtype=np.float64)
    t = np.ascontiguousarray(t, dtype=np.float64)
    X = np.ascontiguousarray(X, dtype=np.float64)
    n, d = X.shape
    out = np.full(3, np.nan)
    treated = t.sum()
    if treated == 0.0 or treated == n:
        return out
    p = treated / n
    z = t - p
    ones = np.ones(n)

    beta, _, _, _, bad = householder_lstsq(np.column_stack([z, ones]), y, tol)
    if bad < 0:
        out[0] = beta[0]
    beta, _, _, _, bad = householder_lstsq(np.column_stack([z, X, ones]), y, tol)
    if bad < 0:
        out[1] = beta[0]
    c = p if np.isnan(mcm_center) else mcm_center
    W = np.empty((n, d + 1))
    W[:, :d] = (t - c)[:, None] * X
    W[:, d] = 1.0
    beta, _, _, _, bad = householder_lstsq(W, y, tol)
    if bad < 0:
        out[2] = X.mean(axis=0) @ beta[:d]
    return out
