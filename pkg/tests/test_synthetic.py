import numpy as np
import pytest

from dr_ate.errors import AllTreatedOrNoneTreated, DimensionMismatch, POutOfRange, UnknownFamily
from dr_ate.estimators import estimate_slr
from dr_ate.synthetic import (
    DEFAULT_FAMILIES,
    FAMILIES,
    SyntheticModelSpec,
    assign_treatment,
    default_specs,
    generate,
    load_default_spec,
    split_seed,
)
from dr_ate.variance_theory import compute_moments


def spec_14a(p=0.9):
    return SyntheticModelSpec("14a", 1, {"alpha1": 6.0, "alpha2": 20.0}, [1.0], p)


class TestAssignTreatment:
    def test_concentration(self):
        t = assign_treatment(10000, 0.5, 3)
        assert 0.48 <= t.mean() <= 0.52

    def test_deterministic(self):
        np.testing.assert_array_equal(assign_treatment(100, 0.3, 9), assign_treatment(100, 0.3, 9))
        assert not np.array_equal(assign_treatment(100, 0.3, 9), assign_treatment(100, 0.3, 10))

    def test_degenerate_propagates(self):
        spec = spec_14a(p=0.999999)
        sd = generate(spec, 10, 0)
        assert sd.dataset.n_treated == 10
        with pytest.raises(AllTreatedOrNoneTreated):
            estimate_slr(sd.dataset)

    def test_p_range(self):
        with pytest.raises(POutOfRange):
            assign_treatment(10, 1.0, 0)


class TestGenerate:
    def test_14a_k_ratio(self):
        sd = generate(spec_14a(), 200_000, 1)
        m = compute_moments(sd.f_true, sd.g_true, sd.dataset.x[:, 0])
        assert m.cov_fx / m.cov_gx == pytest.approx(0.3, abs=1e-9)

    def test_14b_constant_f(self):
        spec = SyntheticModelSpec("14b", 1, {"alpha0": 20.0, "alpha2": 20.0}, [1.0], 0.25)
        assert np.var(generate(spec, 500, 2).f_true) == 0.0

    @pytest.mark.parametrize("family", FAMILIES)
    def test_reconstruction(self, family):
        spec = load_default_spec(family)
        noisy = SyntheticModelSpec(spec.family, spec.d, dict(spec.coefficients),
                                   spec.covariate_mean, spec.p, noise_sd=0.5)
        for s in (spec, noisy):
            sd = generate(s, 300, 5)
            ds = sd.dataset
            np.testing.assert_allclose(ds.y, sd.f_true + sd.g_true * ds.t + sd.noise, atol=1e-12)
            assert sd.ate_true == float(sd.g_true.mean())

    def test_covariate_moments(self):
        spec = load_default_spec("29b")
        x = generate(spec, 100_000, 11).dataset.x
        assert np.all(np.abs(x.mean(axis=0) - spec.covariate_mean) <= 0.02)
        assert np.all(np.abs(x.var(axis=0) - 1.0) <= 0.03)

    @pytest.mark.parametrize("family", ["28", "29c"])
    def test_permutation(self, family):
        spec = load_default_spec(family)
        n = 50
        perm = np.random.default_rng(0).permutation(n)
        base = generate(spec, n, 4)
        shuffled = generate(spec, n, 4, sample_index=perm)
        inverse = np.argsort(perm)
        np.testing.assert_array_equal(shuffled.dataset.y[inverse], base.dataset.y)
        np.testing.assert_array_equal(shuffled.dataset.x[inverse], base.dataset.x)
        np.testing.assert_array_equal(shuffled.g_true[inverse], base.g_true)

    def test_29c_interactions_skip_diagonal(self):
        spec = SyntheticModelSpec(
            "29c", 2,
            {"theta0": 1.0, "theta": [1.0, 0.0], "theta_pairs": [[5.0, 2.0], [0.0, 7.0]]},
            [0.0, 0.0], 0.5,
        )
        f, g = spec.effects(np.array([[1.0, 3.0]]))
        assert f[0] == 1.0
        assert g[0] == pytest.approx(1.0 + 2.0 * 3.0)

    def test_quartic_root_main_effect(self):
        spec = SyntheticModelSpec("29d", 2, {"theta": [1.0, -1.0]}, [0.0, 0.0], 0.1)
        f, g = spec.effects(np.array([[2.0, 1.0]]))
        assert f[0] == pytest.approx(7.0 ** 0.25)
        assert g[0] == pytest.approx(1.0)


class TestSpecValidation:
    def test_unknown_family(self):
        with pytest.raises(UnknownFamily):
            SyntheticModelSpec("99z", 1, {}, [0.0], 0.5)

    def test_wrong_shape(self):
        with pytest.raises(DimensionMismatch):
            SyntheticModelSpec("29d", 3, {"theta": [1.0, 2.0]}, [0.0], 0.5)

    def test_scalar_family_needs_d1(self):
        with pytest.raises(DimensionMismatch):
            SyntheticModelSpec("14a", 2, {"alpha1": 1.0, "alpha2": 1.0}, [0.0, 0.0], 0.5)


class TestConfig:
    @pytest.mark.parametrize("family", FAMILIES)
    def test_round_trip(self, family, tmp_path):
        spec = load_default_spec(family)
        path = tmp_path / "m.ini"
        spec.save(path)
        back = SyntheticModelSpec.load(path)
        assert back.to_config() == spec.to_config()
        x = generate(spec, 20, 1).dataset.x
        for a, b in zip(spec.effects(x), back.effects(x)):
            np.testing.assert_array_equal(a, b)


class TestDefaults:
    def test_canonical_p(self):
        got = {spec.family: p for spec, p in default_specs()}
        assert set(got) == set(DEFAULT_FAMILIES)
        assert got == {"14a": 0.9, "14b": 0.25, "29a": 0.8, "29b": 0.9, "29c": 0.75, "29d": 0.1}

    def test_14_families(self):
        a = load_default_spec("14a")
        assert float(a.coefficients["alpha1"]) == 6.0 and float(a.coefficients["alpha2"]) == 20.0
        assert float(load_default_spec("14b").coefficients["alpha0"]) == 20.0


def test_split_seed_distinct():
    seeds = {split_seed(0, r) for r in range(10000)}
    assert len(seeds) == 10000
    assert split_seed(5, 3) == split_seed(5, 3)
