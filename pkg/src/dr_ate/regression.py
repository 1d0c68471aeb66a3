"""Design matrices and least-squares fitting for the three regression forms.

Column order is always ``[treatment terms, covariates, intercept]`` so the
treatment coefficient sits at index 0 (for MCM, the modified covariates
occupy indices ``0..d-1``).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import _backend
from .data_io import Dataset
from .errors import (
    AllTreatedOrNoneTreated,
    DimensionOverflow,
    LengthMismatch,
    NonFiniteValue,
    RankDeficient,
    ValidationError,
)


class Form(str, enum.Enum):
    SLR = "slr"
    MLR = "mlr"
    MCM = "mcm"

    @classmethod
    def parse(cls, value) -> "Form":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValidationError(f"unknown regression form {value!r}") from None


class ColumnKind(str, enum.Enum):
    CENTERED_TREATMENT = "CenteredTreatment"
    COVARIATE = "Covariate"
    MODIFIED_COVARIATE = "ModifiedCovariate"
    INTERCEPT = "Intercept"


@dataclass(frozen=True)
class Column:
    kind: ColumnKind
    index: int | None = None
    name: str | None = None

    def __str__(self):
        if self.kind is ColumnKind.COVARIATE:
            return self.name or f"x{self.index + 1}"
        if self.kind is ColumnKind.MODIFIED_COVARIATE:
            return f"(t-p)*{self.name or f'x{self.index + 1}'}"
        if self.kind is ColumnKind.CENTERED_TREATMENT:
            return "t-p"
        return "intercept"


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    values: np.ndarray
    columns: tuple
    form: Form | None = None
    center: float | None = None  # probability subtracted from the treatment

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[1] != len(self.columns):
            raise LengthMismatch(f"{v.shape} matrix for {len(self.columns)} labels")
        if v.shape[0] < v.shape[1]:
            raise DimensionOverflow(f"{v.shape[1]} regressors but only {v.shape[0]} rows")
        if sum(c.kind is ColumnKind.INTERCEPT for c in self.columns) != 1:
            raise ValidationError("design needs exactly one intercept column")
        if not np.all(np.isfinite(v)):
            raise NonFiniteValue("design matrix has non-finite entries")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def shape(self):
        return self.values.shape

    @property
    def labels(self):
        return [str(c) for c in self.columns]

    @property
    def intercept_index(self) -> int:
        return next(i for i, c in enumerate(self.columns) if c.kind is ColumnKind.INTERCEPT)

    @classmethod
    def from_array(cls, values, intercept_index=-1):
        """Wrap a raw matrix; every column except ``intercept_index`` is a covariate."""
        values = np.asarray(values, dtype=np.float64)
        q = values.shape[1]
        ii = intercept_index % q
        cols = tuple(
            Column(ColumnKind.INTERCEPT) if j == ii else Column(ColumnKind.COVARIATE, j)
            for j in range(q)
        )
        return cls(values, cols)


def build_design_matrix(dataset: Dataset, form, center: float | None = None) -> DesignMatrix:
    """Regressor matrix for SLR ``[t-p, 1]``, MLR ``[t-p, x, 1]`` or MCM ``[(t-p)x, 1]``.

    ``p`` is the empirical treated fraction unless ``center`` is given (only
    meaningful for MCM, where a known assignment probability may be used).
    """
    form = Form.parse(form)
    n, d = dataset.n, dataset.d
    k = dataset.n_treated
    if k == 0 or k == n:
        raise AllTreatedOrNoneTreated(
            f"{k} of {n} samples treated; need both treated and untreated samples"
        )
    p = dataset.treated_fraction
    if center is not None:
        if form is not Form.MCM:
            raise ValidationError("a custom center is only supported for MCM")
        if not 0.0 < center < 1.0:
            raise ValidationError(f"center must be in (0, 1), got {center}")
    c = p if center is None else float(center)
    z = dataset.t - c
    ones = np.ones(n)
    names = dataset.column_names
    if form is Form.SLR:
        values = np.column_stack([z, ones])
        cols = (Column(ColumnKind.CENTERED_TREATMENT), Column(ColumnKind.INTERCEPT))
    elif form is Form.MLR:
        values = np.column_stack([z, dataset.x, ones])
        cols = (
            Column(ColumnKind.CENTERED_TREATMENT),
            *(Column(ColumnKind.COVARIATE, j, names[j]) for j in range(d)),
            Column(ColumnKind.INTERCEPT),
        )
    else:
        if d == 0:
            raise ValidationError("MCM needs at least one covariate")
        values = np.column_stack([z[:, None] * dataset.x, ones])
        cols = (
            *(Column(ColumnKind.MODIFIED_COVARIATE, j, names[j]) for j in range(d)),
            Column(ColumnKind.INTERCEPT),
        )
    if len(cols) > n:
        raise DimensionOverflow(f"{form.value} needs {len(cols)} regressors but n={n}")
    return DesignMatrix(values, cols, form, c)


@dataclass(frozen=True, eq=False)
class LsFit:
    beta_hat: np.ndarray
    residuals: np.ndarray
    residual_sum_squares: float
    dof_residual: int
    r_factor: np.ndarray  # W = QR; (W'W)^-1 = R^-1 R^-T
    pivots: np.ndarray

    def unscaled_covariance(self) -> np.ndarray:
        """``(W'W)^{-1}`` from the triangular factor."""
        r_inv = np.linalg.inv(self.r_factor)
        return r_inv @ r_inv.T


def solve_least_squares(W, y) -> LsFit:
    """Minimize ``||y - W beta||^2`` by Householder QR.

    Raises :class:`RankDeficient` when some column is, after normalizing all
    columns to unit length, within a normalized Cholesky pivot of ``1e-10`` of
    the span of the columns before it.
    """
    design = W if isinstance(W, DesignMatrix) else None
    values = design.values if design is not None else np.asarray(W, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if values.ndim != 2 or values.shape[0] != y.size:
        raise LengthMismatch(f"design {values.shape} vs outcome of length {y.size}")
    n, q = values.shape
    if n < q:
        raise DimensionOverflow(f"{q} regressors but only {n} rows")
    if not np.all(np.isfinite(y)):
        raise NonFiniteValue("outcome vector has non-finite entries")
    beta, resid, r, pivots, bad = _backend.householder_lstsq(values, y)
    if bad >= 0:
        label = design.labels[bad] if design is not None else None
        what = f"column {bad}" + (f" ({label})" if label else "")
        raise RankDeficient(
            f"design is rank deficient: {what} is collinear with the columns before it",
            column=bad,
            label=label,
        )
    beta.setflags(write=False)
    resid.setflags(write=False)
    return LsFit(
        beta_hat=beta,
        residuals=resid,
        residual_sum_squares=float(resid @ resid),
        dof_residual=n - q,
        r_factor=r,
        pivots=pivots,
    )
