"""t and F tests for fitted regressions.

Both tests assume Gaussian, homoskedastic noise. Tail probabilities come from
the regularized incomplete beta function below, so no statistics library is
needed at runtime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ValidationError
from .regression import ColumnKind, DesignMatrix, LsFit

_EPS = 1e-16
_TINY = 1e-300


def _betacf(x, a, b, max_iter=100000):
    """Continued fraction for I_x(a, b) (modified Lentz)."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError(f"incomplete beta did not converge for x={x}, a={a}, b={b}")


def regularized_incomplete_beta(x: float, a: float, b: float) -> float:
    """``I_x(a, b)`` for ``0 <= x <= 1``, ``a, b > 0``."""
    if not (a > 0 and b > 0):
        raise DomainError(f"a and b must be positive, got a={a}, b={b}")
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"x must lie in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_front) * _betacf(x, a, b) / a
    return 1.0 - math.exp(log_front) * _betacf(1.0 - x, b, a) / b


def student_t_two_sided(t: float, dof: float) -> float:
    """``P(|T| >= |t|)`` for Student-t with ``dof`` degrees of freedom."""
    if math.isinf(t):
        return 0.0
    return regularized_incomplete_beta(dof / (dof + t * t), dof / 2.0, 0.5)


def f_upper_tail(f: float, dfn: float, dfd: float) -> float:
    """``P(F >= f)`` for the F(dfn, dfd) distribution."""
    if f <= 0.0:
        return 1.0
    if math.isinf(f):
        return 0.0
    return regularized_incomplete_beta(dfd / (dfd + dfn * f), dfd / 2.0, dfn / 2.0)


def _is_perfect_fit(fit: LsFit, y_scale: float) -> bool:
    return fit.residual_sum_squares <= 1e-20 * max(y_scale, 1e-300)


@dataclass(frozen=True)
class StatTest:
    statistic: float
    p_value: float
    perfect_fit: bool = False


def t_test(fit: LsFit, W: DesignMatrix, coeff_index: int = 0) -> StatTest:
    """Two-sided test of ``H0: beta_j = 0`` with ``se^2 = sigma2_hat [(W'W)^-1]_jj``."""
    if fit.dof_residual < 1:
        raise ValidationError("t test needs at least one residual degree of freedom")
    beta = float(fit.beta_hat[coeff_index])
    fitted = W.values @ fit.beta_hat
    if _is_perfect_fit(fit, float(fitted @ fitted)):
        return StatTest(math.copysign(math.inf, beta) if beta != 0 else 0.0,
                          0.0 if beta != 0 else 1.0, True)
    sigma2 = fit.residual_sum_squares / fit.dof_residual
    se = math.sqrt(sigma2 * fit.unscaled_covariance()[coeff_index, coeff_index])
    t = beta / se
    return StatTest(t, student_t_two_sided(t, fit.dof_residual))


def f_test(fit: LsFit, W: DesignMatrix, y) -> StatTest:
    """Test of all non-intercept coefficients being zero, against the intercept-only fit.

    ``W`` must contain an intercept column.
    """
    y = np.asarray(y, dtype=np.float64)
    q1 = W.shape[1] - 1
    if q1 < 1:
        raise ValidationError("F test needs at least one non-intercept column")
    if fit.dof_residual < 1:
        raise ValidationError("F test needs at least one residual degree of freedom")
    rss = fit.residual_sum_squares
    # with an intercept, RSS0 - RSS is the explained sum of squares; computed
    # directly to avoid cancellation when the regressors explain little
    ec = W.values @ fit.beta_hat - y.mean()
    explained = float(ec @ ec)
    if _is_perfect_fit(fit, float(y @ y)):
        if explained <= 1e-20 * max(float(y @ y), 1e-300):
            return StatTest(0.0, 1.0, True)
        return StatTest(math.inf, 0.0, True)
    f = (explained / q1) / (rss / fit.dof_residual)
    return StatTest(f, f_upper_tail(f, q1, fit.dof_residual))


@dataclass(frozen=True)
class SignificanceReport:
    method: str
    t_statistic: float
    t_p_value: float
    f_statistic: float
    f_p_value: float
    dof_model: int
    dof_residual: int
    sigma2_hat: float
    perfect_fit: bool = False

    def to_dict(self):
        def num(v):
            return v if math.isfinite(v) else ("inf" if v > 0 else "-inf")

        return {
            "method": self.method,
            "t_statistic": num(self.t_statistic),
            "t_p_value": self.t_p_value,
            "f_statistic": num(self.f_statistic),
            "f_p_value": self.f_p_value,
            "dof_model": self.dof_model,
            "dof_residual": self.dof_residual,
            "sigma2_hat": self.sigma2_hat,
            "perfect_fit": self.perfect_fit,
        }


def significance(estimate) -> SignificanceReport:
    """t test on the first treatment term and F test on all regressors of an :class:`AteEstimate`."""
    W, fit = estimate.design, estimate.fit
    tt = t_test(fit, W, 0)
    y = W.values @ fit.beta_hat + fit.residuals
    ft = f_test(fit, W, y)
    dof_model = sum(c.kind is not ColumnKind.INTERCEPT for c in W.columns)
    return SignificanceReport(
        method=estimate.method,
        t_statistic=tt.statistic,
        t_p_value=tt.p_value,
        f_statistic=ft.statistic,
        f_p_value=ft.p_value,
        dof_model=dof_model,
        dof_residual=fit.dof_residual,
        sigma2_hat=fit.residual_sum_squares / fit.dof_residual,
        perfect_fit=tt.perfect_fit or ft.perfect_fit,
    )
