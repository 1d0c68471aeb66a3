"""Selects the kernel implementation at import time.

The compiled extension is used when it imports; ``DR_ATE_BACKEND=python``
forces the numpy fallback. :func:`use_backend` switches at runtime (for the
benchmark and for tests that compare the two).
"""

import os

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

# normalized Cholesky pivot below which a design column counts as collinear
RANK_TOL = 1e-10

_available = {"python": _kernels_py}
if _compiled is not None:
    _available["cython"] = _compiled

_active = _kernels_py
if _compiled is not None and os.environ.get("DR_ATE_BACKEND", "").lower() != "python":
    _active = _compiled


def available_backends():
    return sorted(_available)


def backend_name():
    return _active.NAME


def use_backend(name):
    """Activate backend ``name`` ("cython" or "python"); returns the previous name."""
    global _active
    if name not in _available:
        raise ValueError(f"backend {name!r} not available; have {available_backends()}")
    previous = _active.NAME
    _active = _available[name]
    return previous


def householder_lstsq(W, y, tol=RANK_TOL):
    return _active.householder_lstsq(W, y, tol)


def replicate_estimates(y, t, X, mcm_center=float("nan"), tol=RANK_TOL):
    return _active.replicate_estimates(y, t, X, float(mcm_center), tol)
