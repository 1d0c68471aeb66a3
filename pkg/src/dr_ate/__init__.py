"""Linear estimators of the average treatment effect of demand-response signals.

Three estimators (SLR, MLR, MCM), their nominal variances, synthetic models
with known effects, a deterministic Monte Carlo harness, and t/F tests.
"""

__version__ = "0.1.0"

from ._backend import available_backends, backend_name, use_backend
from .data_io import Dataset, build_event_dataset, load_csv, standardize_covariates, write_csv
from .estimators import AteEstimate, estimate, estimate_mcm, estimate_mlr, estimate_slr
from .monte_carlo import McConfig, McReport, ranking_sweep, run_monte_carlo, theory_vs_empirical
from .regression import DesignMatrix, LsFit, build_design_matrix, solve_least_squares
from .significance import SignificanceReport, f_test, regularized_incomplete_beta, significance, t_test
from .synthetic import SyntheticModelSpec, assign_treatment, default_specs, generate, load_default_spec
from .variance_theory import (
    compute_moments,
    delta,
    delta_sign_region,
    mcm_variance_nominal,
    mlr_variance_nominal,
    rank_estimators,
    ratio_variance_approx,
    slr_variance_nominal,
)

__all__ = [
    "AteEstimate", "Dataset", "DesignMatrix", "LsFit", "McConfig", "McReport",
    "SignificanceReport", "SyntheticModelSpec", "assign_treatment", "available_backends",
    "backend_name", "build_design_matrix", "build_event_dataset", "compute_moments",
    "default_specs", "delta", "delta_sign_region", "estimate", "estimate_mcm", "estimate_mlr",
    "estimate_slr", "f_test", "generate", "load_csv", "load_default_spec",
    "mcm_variance_nominal", "mlr_variance_nominal", "rank_estimators", "ranking_sweep",
    "ratio_variance_approx", "regularized_incomplete_beta", "run_monte_carlo", "significance",
    "slr_variance_nominal", "solve_least_squares", "standardize_covariates", "t_test",
    "theory_vs_empirical", "use_backend", "write_csv",
]
