"""Nominal (second-order) variances of the ATE estimators and their comparison.

Everything here is for a scalar covariate. Moments use the 1/N normalization.
``delta`` is ``p(1-p)N`` times ``Var(SLR) - Var(MLR)``: positive means MLR
has the smaller nominal variance.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    LengthMismatch,
    NonFinite,
    NotStandardized,
    POutOfRange,
    ValidationError,
    ZeroDenominatorMean,
)

LABEL_ORDER = ("slr", "mlr", "mcm")


def _check_p(p):
    if not 0.0 < p < 1.0:
        raise POutOfRange(f"p must lie in (0, 1), got {p}")


@dataclass(frozen=True)
class MomentSummary:
    var_f: float
    var_g: float
    cov_gf: float
    cov_fx: float
    cov_gx: float
    var_x: float
    mean_x: float
    n: int


def compute_moments(f, g, x) -> MomentSummary:
    """Empirical moments of the ground-truth main effect ``f``, effect ``g`` and covariate ``x``."""
    f, g, x = (np.asarray(a, dtype=np.float64).reshape(-1) for a in (f, g, x))
    if not (f.size == g.size == x.size):
        raise LengthMismatch(f"lengths differ: f={f.size}, g={g.size}, x={x.size}")
    if f.size < 2:
        raise ValidationError("need at least 2 samples")
    fc, gc, xc = f - f.mean(), g - g.mean(), x - x.mean()
    n = f.size
    return MomentSummary(
        var_f=float(fc @ fc / n),
        var_g=float(gc @ gc / n),
        cov_gf=float(gc @ fc / n),
        cov_fx=float(fc @ xc / n),
        cov_gx=float(gc @ xc / n),
        var_x=float(xc @ xc / n),
        mean_x=float(x.mean()),
        n=n,
    )


class Sign(enum.IntEnum):
    NEGATIVE = -1
    ZERO = 0
    POSITIVE = 1


def delta_value(cov_fx, cov_gx, p):
    """``cov_fx^2 + 2(1-p) cov_gx cov_fx + (2p - 3p^2) cov_gx^2`` (vectorizes over numpy input)."""
    return cov_fx**2 + 2.0 * (1.0 - p) * cov_gx * cov_fx + (2.0 * p - 3.0 * p**2) * cov_gx**2


def delta_roots(k: float) -> tuple:
    """Zeros of delta in ``p``: it factors as ``-cov_gx^2 (3p - 2 - k)(p + k)``."""
    return (-k, (2.0 + k) / 3.0)


def _sign(value, tol):
    if value > tol:
        return Sign.POSITIVE
    if value < -tol:
        return Sign.NEGATIVE
    return Sign.ZERO


@dataclass(frozen=True)
class DeltaReport:
    p: float
    k: float | None  # None when cov_gx == 0
    delta: float
    sign: Sign
    roots: tuple | None
    cov_fx: float
    cov_gx: float

    def to_dict(self):
        return {
            "p": self.p,
            "k": self.k,
            "cov_fx": self.cov_fx,
            "cov_gx": self.cov_gx,
            "delta": self.delta,
            "sign": int(self.sign),
            "roots": list(self.roots) if self.roots is not None else None,
        }


def delta(moments: MomentSummary, p: float, tol: float = 1e-12) -> DeltaReport:
    """Variance gap between SLR and MLR for a unit-variance covariate."""
    _check_p(p)
    if abs(moments.var_x - 1.0) > 1e-6:
        raise NotStandardized(
            f"covariate variance is {moments.var_x:.6g}; standardize covariates first"
        )
    cf, cg = moments.cov_fx, moments.cov_gx
    value = float(delta_value(cf, cg, p))
    if cg != 0.0:
        k = cf / cg
        roots = delta_roots(k)
    else:
        k, roots = None, None
    return DeltaReport(p, k, value, _sign(value, tol), roots, cf, cg)


def root_condition_negative(p, k, tol=1e-9):
    """Closed-form test for delta < 0 with ``cov_gx != 0``: ``p`` outside the root interval."""
    lo, hi = sorted(delta_roots(k))
    return p < lo - tol or p > hi + tol


def delta_sign_region(p_grid, k_grid, tol: float = 1e-9, verify: bool = True) -> np.ndarray:
    """Sign of delta on a ``(k, p)`` grid with ``cov_gx = 1, cov_fx = k``.

    Returns an int array of shape ``(len(k_grid), len(p_grid))`` with entries
    in {-1, 0, 1}. With ``verify`` every entry is checked against
    :func:`root_condition_negative`.
    """
    p_grid = np.asarray(p_grid, dtype=np.float64).reshape(-1)
    k_grid = np.asarray(k_grid, dtype=np.float64).reshape(-1)
    for name, grid in (("p", p_grid), ("k", k_grid)):
        if grid.size == 0:
            raise ValidationError(f"{name} grid is empty")
        if np.any(np.diff(grid) <= 0):
            raise ValidationError(f"{name} grid must be strictly increasing")
    if p_grid[0] <= 0.0 or p_grid[-1] >= 1.0:
        raise POutOfRange("p grid must lie inside (0, 1)")
    values = delta_value(k_grid[:, None], 1.0, p_grid[None, :])
    signs = np.where(values > tol, 1, np.where(values < -tol, -1, 0)).astype(np.int8)
    if verify:
        for i, k in enumerate(k_grid):
            for j, p in enumerate(p_grid):
                if (signs[i, j] == -1) != root_condition_negative(p, k):
                    raise AssertionError(f"sign/root mismatch at p={p}, k={k}")
    return signs


def region_to_csv(signs, p_grid, k_grid) -> str:
    """Rows are k values, columns p values; first column holds k."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k\\p", *(repr(float(p)) for p in p_grid)])
    for k, row in zip(k_grid, signs):
        w.writerow([repr(float(k)), *(int(s) for s in row)])
    return buf.getvalue()


def slr_variance_nominal(moments: MomentSummary, p: float, n: int) -> float:
    """``((1-p)^2 Var g + Var f + 2(1-p) Cov(g,f)) / (p(1-p)n)``."""
    _check_p(p)
    if n < 1:
        raise ValidationError("n must be positive")
    num = (1.0 - p) ** 2 * moments.var_g + moments.var_f + 2.0 * (1.0 - p) * moments.cov_gf
    return num / (p * (1.0 - p) * n)


def mlr_variance_nominal(moments: MomentSummary, p: float, n: int) -> float:
    """SLR nominal variance minus ``delta / (p(1-p)n)``.

    The second-order approximation can come out negative for extreme
    moments; the value is returned as is.
    """
    rep = delta(moments, p)
    return slr_variance_nominal(moments, p, n) - rep.delta / (p * (1.0 - p) * n)


def mcm_variance_nominal(gamma: float, mu: float, p: float, n: int, centering: str = "design") -> float:
    """MCM nominal variance for constant ``f``, ``g = gamma x``, ``x ~ N(mu, 1)``.

    ``centering="design"`` (modified covariates built with the assignment
    probability) gives ``gamma^2 mu^2 p^2 (3 + mu^2) / (n p (1-p) (1 + mu^2)^2)``.
    Centering on the empirical treated fraction removes the component of the
    noise along ``x(x - mu)``'s mean and replaces ``3 + mu^2`` by ``2 + mu^2``.
    Outside this regime the value has no meaning.
    """
    _check_p(p)
    if n < 1:
        raise ValidationError("n must be positive")
    if centering == "design":
        kurt = 3.0
    elif centering == "empirical":
        kurt = 2.0
    else:
        raise ValidationError(f"centering must be 'design' or 'empirical', got {centering!r}")
    m2 = mu * mu
    return gamma**2 * m2 * p**2 * (kurt + m2) / (n * p * (1.0 - p) * (1.0 + m2) ** 2)


def linear_effect_variances(gamma: float, mu: float, p: float, n: int, centering: str = "design") -> dict:
    """Nominal variances of all three estimators for constant ``f``, ``g = gamma x``."""
    _check_p(p)
    denom = p * (1.0 - p) * n
    return {
        "slr": (1.0 - p) ** 2 * gamma**2 / denom,
        "mlr": (2.0 * p - 1.0) ** 2 * gamma**2 / denom,
        "mcm": mcm_variance_nominal(gamma, mu, p, n, centering),
    }


def ratio_variance_approx(mean_num, var_num, mean_den, var_den, cov_nd) -> float:
    """Second-order approximation of ``Var(X / Y)`` from the first two moments."""
    if mean_den == 0:
        raise ZeroDenominatorMean("denominator mean must be non-zero")
    return (
        var_num / mean_den**2
        - 2.0 * mean_num * cov_nd / mean_den**3
        + mean_num**2 * var_den / mean_den**4
    )


@dataclass(frozen=True)
class Ranking:
    best: str
    medium: str
    worst: str
    tied: bool = False

    def as_tuple(self):
        return (self.best, self.medium, self.worst)


def rank_estimators(variances: dict) -> Ranking:
    """Order three estimators by ascending variance; ties keep SLR < MLR < MCM order."""
    if len(variances) != 3:
        raise ValidationError(f"need exactly three variances, got {len(variances)}")
    for name, v in variances.items():
        if not math.isfinite(v):
            raise NonFinite(f"variance for {name} is {v}")

    def order_key(name):
        return LABEL_ORDER.index(name) if name in LABEL_ORDER else len(LABEL_ORDER)

    names = sorted(variances, key=lambda m: (variances[m], order_key(m), m))
    values = [variances[m] for m in names]
    tied = values[0] == values[1] or values[1] == values[2]
    return Ranking(names[0], names[1], names[2], tied)
