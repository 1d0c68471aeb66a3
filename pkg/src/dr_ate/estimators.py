"""SLR, MLR and MCM estimators of the average treatment effect."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .data_io import Dataset
from .errors import NearZeroCovariateMeanWarning
from .regression import DesignMatrix, Form, LsFit, build_design_matrix, solve_least_squares

METHODS = ("slr", "mlr", "mcm")

# below this |mean(x_j)| for every j, x-bar' gamma cannot carry the ATE
NEAR_ZERO_MEAN = 1e-8


@dataclass(frozen=True, eq=False)
class AteEstimate:
    method: str
    ate_hat: float
    p_hat: float
    n: int
    coefficients: dict
    fit: LsFit
    design: DesignMatrix
    warnings: tuple = field(default=())

    def to_dict(self):
        return {
            "method": self.method,
            "ate_hat": self.ate_hat,
            "p_hat": self.p_hat,
            "center": self.design.center,
            "n": self.n,
            "coefficients": dict(self.coefficients),
            "rss": self.fit.residual_sum_squares,
            "dof_residual": self.fit.dof_residual,
            "warnings": list(self.warnings),
        }


def _fit(dataset, form, center=None):
    design = build_design_matrix(dataset, form, center=center)
    fit = solve_least_squares(design, dataset.y)
    coefs = {label: float(b) for label, b in zip(design.labels, fit.beta_hat)}
    return design, fit, coefs


def estimate_slr(dataset: Dataset) -> AteEstimate:
    """Difference in group means, i.e. the treatment coefficient of ``y ~ (t-p) + 1``."""
    design, fit, coefs = _fit(dataset, Form.SLR)
    t = dataset.t.astype(bool)
    ate = float(dataset.y[t].mean() - dataset.y[~t].mean())
    return AteEstimate("slr", ate, dataset.treated_fraction, dataset.n, coefs, fit, design)


def estimate_mlr(dataset: Dataset) -> AteEstimate:
    """Treatment coefficient of ``y ~ (t-p) + x + 1``."""
    design, fit, coefs = _fit(dataset, Form.MLR)
    return AteEstimate(
        "mlr", float(fit.beta_hat[0]), dataset.treated_fraction, dataset.n, coefs, fit, design
    )


def estimate_mcm(dataset: Dataset, center: float | None = None) -> AteEstimate:
    """Modified covariate method: fit ``y ~ (t-p)x + 1`` and average ``x_i' gamma``.

    ``center`` replaces the empirical treated fraction as ``p`` when the
    assignment probability is known by design.
    """
    design, fit, coefs = _fit(dataset, Form.MCM, center=center)
    d = dataset.d
    xbar = dataset.x.mean(axis=0)
    ate = float(xbar @ fit.beta_hat[:d])
    notes = ()
    if np.all(np.abs(xbar) < NEAR_ZERO_MEAN):
        msg = "all covariate means are ~0; the MCM estimate is degenerate"
        warnings.warn(msg, NearZeroCovariateMeanWarning, stacklevel=2)
        notes = ("NearZeroCovariateMean",)
    return AteEstimate(
        "mcm", ate, dataset.treated_fraction, dataset.n, coefs, fit, design, notes
    )


_ESTIMATORS = {"slr": estimate_slr, "mlr": estimate_mlr, "mcm": estimate_mcm}


def estimate(dataset: Dataset, method: str) -> AteEstimate:
    return _ESTIMATORS[Form.parse(method).value](dataset)
