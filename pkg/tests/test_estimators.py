import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dr_ate.data_io import Dataset
from dr_ate.errors import AllTreatedOrNoneTreated, NearZeroCovariateMeanWarning, RankDeficient
from dr_ate.estimators import estimate, estimate_mcm, estimate_mlr, estimate_slr
from dr_ate.synthetic import SyntheticModelSpec, generate


def mcm_oracle(y, t, x, center):
    """x-bar' gamma via the dense normal equations."""
    W = np.column_stack([(t - center)[:, None] * x, np.ones(len(y))])
    beta = np.linalg.inv(W.T @ W) @ W.T @ y
    return x.mean(axis=0) @ beta[: x.shape[1]]


class TestSlr:
    def test_difference_in_means(self):
        ds = Dataset([1.0, 2.0, 3.0, 4.0], [0, 0, 1, 1], np.empty((4, 0)))
        assert estimate_slr(ds).ate_hat == pytest.approx(2.0, abs=1e-12)

    def test_equals_regression_coefficient(self, rng):
        ds = Dataset(rng.standard_normal(40), rng.random(40) < 0.3, rng.standard_normal((40, 1)))
        est = estimate_slr(ds)
        assert est.ate_hat == pytest.approx(est.coefficients["t-p"], abs=1e-12)

    def test_all_control(self):
        ds = Dataset([1.0, 2.0], [0, 0], [[1.0], [2.0]])
        with pytest.raises(AllTreatedOrNoneTreated):
            estimate_slr(ds)


class TestMlr:
    def test_exact_linear_model(self):
        x = np.array([0.0, 1.0, 2.0, 3.0, 4.0, 5.0])
        t = np.array([1, 0, 1, 0, 0, 1], dtype=float)
        y = 1.0 + 2.0 * x + 3.0 * t
        est = estimate_mlr(Dataset(y, t, x))
        assert est.ate_hat == pytest.approx(3.0, abs=1e-10)
        assert est.coefficients["x1"] == pytest.approx(2.0, abs=1e-10)

    def test_collinear_covariates(self):
        x = np.column_stack([np.arange(6.0), 2 * np.arange(6.0)])
        ds = Dataset(np.arange(6.0), [1, 0, 1, 0, 1, 0], x)
        with pytest.raises(RankDeficient):
            estimate_mlr(ds)


class TestMcm:
    def test_matches_oracle(self, rng):
        n = 60
        x = rng.standard_normal((n, 2)) + [1.0, -0.5]
        t = (rng.random(n) < 0.4).astype(float)
        y = x @ [0.3, 0.7] * t + rng.standard_normal(n)
        ds = Dataset(y, t, x)
        assert estimate_mcm(ds).ate_hat == pytest.approx(mcm_oracle(y, t, x, t.mean()), rel=1e-10)
        assert estimate_mcm(ds, center=0.4).ate_hat == pytest.approx(
            mcm_oracle(y, t, x, 0.4), rel=1e-10
        )

    def test_near_zero_mean_warns(self, rng):
        x = rng.standard_normal((30, 1))
        x -= x.mean()
        ds = Dataset(rng.standard_normal(30), np.arange(30) % 2, x)
        with pytest.warns(NearZeroCovariateMeanWarning):
            est = estimate_mcm(ds)
        assert est.warnings == ("NearZeroCovariateMean",)
        assert abs(est.ate_hat) < 1e-6

    def test_no_warning_otherwise(self, rng):
        ds = Dataset(rng.standard_normal(30), np.arange(30) % 2, rng.standard_normal((30, 1)) + 1)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            assert estimate_mcm(ds).warnings == ()


def test_dispatch(rng):
    ds = Dataset(rng.standard_normal(20), np.arange(20) % 2, rng.standard_normal((20, 1)) + 1)
    for m in ("slr", "MLR", "mcm"):
        assert estimate(ds, m).method == m.lower()
    d = estimate(ds, "mlr").to_dict()
    assert set(d) >= {"method", "ate_hat", "p_hat", "coefficients", "warnings"}


@st.composite
def datasets(draw):
    n = draw(st.integers(8, 50))
    r = np.random.default_rng(draw(st.integers(0, 2**32 - 1)))
    k = draw(st.integers(2, n - 2))
    t = np.zeros(n)
    t[:k] = 1
    r.shuffle(t)
    x = r.standard_normal((n, 2)) + 1.0
    y = x[:, 0] * 2 + t * x[:, 1] + r.standard_normal(n)
    return Dataset(y, t, x)


class TestInvariants:
    @settings(max_examples=50, deadline=None)
    @given(datasets())
    def test_label_swap_negates(self, ds):
        flipped = Dataset(ds.y, 1 - ds.t, ds.x)
        for m in ("slr", "mlr", "mcm"):
            a, b = estimate(ds, m).ate_hat, estimate(flipped, m).ate_hat
            assert b == pytest.approx(-a, abs=1e-9 * (1 + abs(a)))

    @settings(max_examples=50, deadline=None)
    @given(datasets(), st.floats(-50, 50))
    def test_mlr_covariate_translation(self, ds, c):
        moved = Dataset(ds.y, ds.t, ds.x + c)
        a, b = estimate_mlr(ds).ate_hat, estimate_mlr(moved).ate_hat
        assert b == pytest.approx(a, abs=1e-7 * (1 + abs(a)))

    @settings(max_examples=50, deadline=None)
    @given(datasets(), st.floats(-100, 100))
    def test_outcome_shift(self, ds, c):
        moved = Dataset(ds.y + c, ds.t, ds.x)
        for m in ("slr", "mlr", "mcm"):
            a, b = estimate(ds, m).ate_hat, estimate(moved, m).ate_hat
            assert b == pytest.approx(a, abs=1e-8 * (1 + abs(c)))


@pytest.mark.slow
def test_consistency():
    spec = SyntheticModelSpec("14b", 1, {"alpha0": 20.0, "alpha2": 20.0}, [1.0], 0.25)
    spread = {}
    for n in (250, 4000):
        errs = np.array([
            [estimate(sd.dataset, m).ate_hat - sd.ate_true for m in ("slr", "mlr", "mcm")]
            for sd in (generate(spec, n, 1000 + r) for r in range(200))
        ])
        spread[n] = np.sqrt((errs**2).mean(axis=0))
    # root mean squared error shrinks roughly like 1/sqrt(n): 16x more data, ~4x smaller
    assert np.all(spread[4000] < spread[250] / 2.5)
