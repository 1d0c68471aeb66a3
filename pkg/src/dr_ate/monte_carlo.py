"""Replicated synthetic experiments.

Replication ``r`` at sample size ``n`` draws a dataset with seed
``split_seed(master_seed, r)`` and applies every estimator to it. Results are
stored per replication index and reduced in index order, so the report does
not depend on how many worker processes computed it.

Two spreads are reported per estimator: ``variance`` is the sample variance of
the estimates themselves, ``error_variance`` that of ``estimate - true ATE``
(the true ATE moves with the covariate draw). Comparisons with the nominal
formulas and estimator rankings use ``error_variance``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .data_io import Dataset
from .errors import AllReplicationsFailed, DataError, RegimeMismatch, ValidationError
from .synthetic import SyntheticModelSpec, draw, split_seed
from .variance_theory import (
    MomentSummary,
    Ranking,
    rank_estimators,
    linear_effect_variances,
    slr_variance_nominal,
    mlr_variance_nominal,
)

STANDARD = ("slr", "mlr", "mcm")


@dataclass(frozen=True, eq=False)
class McConfig:
    spec: SyntheticModelSpec
    n_values: tuple
    replications: int
    master_seed: int = 0
    estimators: tuple = STANDARD
    mcm_centering: str = "empirical"
    workers: int = 1

    def __post_init__(self):
        n_values = tuple(int(n) for n in self.n_values)
        if not n_values or list(n_values) != sorted(set(n_values)):
            raise ValidationError("n_values must be a non-empty strictly increasing list")
        if n_values[0] < self.spec.d + 2:
            raise ValidationError(f"every n must be at least d + 2 = {self.spec.d + 2}")
        if self.replications < 2:
            raise ValidationError("need at least 2 replications")
        if self.mcm_centering not in ("empirical", "design"):
            raise ValidationError("mcm_centering must be 'empirical' or 'design'")
        if self.workers < 1:
            raise ValidationError("workers must be at least 1")
        if not 0 <= int(self.master_seed) < 2**64:
            raise ValidationError("master_seed must be a 64-bit unsigned integer")
        ests = tuple(self.estimators)
        if not ests:
            raise ValidationError("no estimators selected")
        for e in ests:
            if isinstance(e, str) and e not in STANDARD:
                raise ValidationError(f"unknown estimator {e!r}")
        object.__setattr__(self, "n_values", n_values)
        object.__setattr__(self, "estimators", ests)

    @property
    def estimator_names(self):
        return tuple(_name(e) for e in self.estimators)


def _name(est):
    if isinstance(est, str):
        return est
    return getattr(est, "name", None) or getattr(est, "__name__", repr(est))


@dataclass(frozen=True)
class McEntry:
    estimator: str
    n: int
    p: float
    mean_estimate: float
    variance: float
    error_variance: float
    bias: float
    failures: int
    successes: int

    def to_dict(self):
        return {
            "estimator": self.estimator,
            "n": self.n,
            "p": self.p,
            "mean_estimate": _json_float(self.mean_estimate),
            "variance": _json_float(self.variance),
            "error_variance": _json_float(self.error_variance),
            "bias": _json_float(self.bias),
            "failures": self.failures,
            "successes": self.successes,
        }


def _json_float(v):
    return v if math.isfinite(v) else None


@dataclass(eq=False)
class McReport:
    config: McConfig
    entries: list
    estimates: dict = field(repr=False)  # n -> (replications, n_estimators)
    truths: dict = field(repr=False)  # n -> (replications,)

    def get(self, estimator: str, n: int) -> McEntry:
        for e in self.entries:
            if e.estimator == estimator and e.n == n:
                return e
        raise KeyError((estimator, n))

    def errors(self, estimator: str, n: int) -> np.ndarray:
        j = self.config.estimator_names.index(estimator)
        return self.estimates[n][:, j] - self.truths[n]

    def variance_difference(self, a: str, b: str, n: int, kind: str = "error"):
        """``Var(a) - Var(b)`` and its Monte Carlo standard error.

        Uses replications where both succeeded; the standard error comes from
        the per-replication differences of squared deviations, which accounts
        for the two estimators sharing data.
        """
        ja = self.config.estimator_names.index(a)
        jb = self.config.estimator_names.index(b)
        va, vb = self.estimates[n][:, ja], self.estimates[n][:, jb]
        if kind == "error":
            va, vb = va - self.truths[n], vb - self.truths[n]
        ok = np.isfinite(va) & np.isfinite(vb)
        va, vb = va[ok], vb[ok]
        m = va.size
        if m < 3:
            return math.nan, math.nan
        dev = (va - va.mean()) ** 2 - (vb - vb.mean()) ** 2
        scale = m / (m - 1)
        return float(scale * dev.mean()), float(scale * dev.std(ddof=1) / math.sqrt(m))

    def to_dict(self):
        spec = self.config.spec
        return {
            "schema": 1,
            "kind": "monte_carlo",
            "family": spec.family,
            "d": spec.d,
            "p": spec.p,
            "noise_sd": spec.noise_sd,
            "replications": self.config.replications,
            "master_seed": int(self.config.master_seed),
            "mcm_centering": self.config.mcm_centering,
            "results": [e.to_dict() for e in self.entries],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["estimator", "n", "p", "variance", "error_variance", "bias", "failures"])
        for e in self.entries:
            w.writerow([e.estimator, e.n, repr(e.p), repr(e.variance),
                        repr(e.error_variance), repr(e.bias), e.failures])
        return buf.getvalue()


def _replicate_chunk(args):
    spec, n, seeds, estimators, mcm_center = args
    k = len(estimators)
    est = np.full((len(seeds), k), np.nan)
    truth = np.empty(len(seeds))
    std_idx = [j for j, e in enumerate(estimators) if isinstance(e, str)]
    for row, seed in enumerate(seeds):
        x, t, f, g, noise, y = draw(spec, n, seed)
        truth[row] = g.mean()
        if std_idx:
            triple = _backend.replicate_estimates(y, t, x, mcm_center)
            for j in std_idx:
                est[row, j] = triple[STANDARD.index(estimators[j])]
        if len(std_idx) < k:
            ds = Dataset(y, t, x)
            for j, e in enumerate(estimators):
                if isinstance(e, str):
                    continue
                try:
                    est[row, j] = float(e(ds))
                except DataError:
                    pass
    return est, truth


def _chunks(seq, size):
    return [seq[i:i + size] for i in range(0, len(seq), size)]


def run_monte_carlo(config: McConfig) -> McReport:
    spec = config.spec
    mcm_center = spec.p if config.mcm_centering == "design" else math.nan
    seeds = [split_seed(config.master_seed, r) for r in range(config.replications)]
    estimates, truths, entries = {}, {}, []
    names = config.estimator_names
    for n in config.n_values:
        if config.workers == 1:
            est, truth = _replicate_chunk((spec, n, seeds, config.estimators, mcm_center))
        else:
            size = max(1, math.ceil(len(seeds) / (4 * config.workers)))
            jobs = [(spec, n, chunk, config.estimators, mcm_center) for chunk in _chunks(seeds, size)]
            with ProcessPoolExecutor(max_workers=config.workers) as pool:
                parts = list(pool.map(_replicate_chunk, jobs))
            est = np.concatenate([p[0] for p in parts])
            truth = np.concatenate([p[1] for p in parts])
        if not np.any(np.isfinite(est)):
            raise AllReplicationsFailed(
                f"every replication failed at n = {n} (p = {spec.p}); "
                "treatment draws were all-treated or all-control"
            )
        estimates[n], truths[n] = est, truth
        for j, name in enumerate(names):
            col = est[:, j]
            ok = np.isfinite(col)
            m = int(ok.sum())
            vals, err = col[ok], col[ok] - truth[ok]
            entries.append(
                McEntry(
                    estimator=name,
                    n=n,
                    p=spec.p,
                    mean_estimate=float(vals.mean()) if m else math.nan,
                    variance=float(vals.var(ddof=1)) if m >= 2 else math.nan,
                    error_variance=float(err.var(ddof=1)) if m >= 2 else math.nan,
                    bias=float(err.mean()) if m else math.nan,
                    failures=config.replications - m,
                    successes=m,
                )
            )
    return McReport(config, entries, estimates, truths)


# -- sweeps and theory comparisons -------------------------------------------


@dataclass(frozen=True)
class RankingRow:
    p: float
    ranking: Ranking
    error_variances: dict
    margins: tuple  # (medium - best, worst - medium) as (difference, standard error)

    def to_dict(self):
        return {
            "p": self.p,
            "best": self.ranking.best,
            "medium": self.ranking.medium,
            "worst": self.ranking.worst,
            "tied": self.ranking.tied,
            "error_variances": {k: _json_float(v) for k, v in self.error_variances.items()},
            "margins": [{"difference": _json_float(d), "se": _json_float(s)} for d, s in self.margins],
        }


def ranking_sweep(spec, p_values, n, replications, master_seed=0, workers=1, mcm_centering="empirical"):
    """Best/medium/worst ordering by empirical error variance at each ``p``."""
    rows = []
    for p in p_values:
        if not 0.0 < p < 1.0:
            raise ValidationError(f"p values must lie in (0, 1), got {p}")
        cfg = McConfig(spec.with_p(float(p)), (n,), replications, master_seed,
                       STANDARD, mcm_centering, workers)
        rep = run_monte_carlo(cfg)
        variances = {m: rep.get(m, n).error_variance for m in STANDARD}
        ranking = rank_estimators(variances)
        order = ranking.as_tuple()
        margins = (
            rep.variance_difference(order[1], order[0], n),
            rep.variance_difference(order[2], order[1], n),
        )
        rows.append(RankingRow(float(p), ranking, variances, margins))
    return rows


@dataclass(frozen=True)
class TheoryComparison:
    estimator: str
    nominal: float | None
    empirical: float
    relative_error: float | None
    mc_se: float

    def to_dict(self):
        return {
            "estimator": self.estimator,
            "nominal": self.nominal,
            "empirical": _json_float(self.empirical),
            "relative_error": self.relative_error,
            "mc_se": _json_float(self.mc_se),
        }


def population_moments(spec: SyntheticModelSpec) -> MomentSummary:
    """Population moments of the scalar-covariate linear families (unit-variance ``x``)."""
    c = spec.coefficients
    mu = float(spec.covariate_mean[0])
    if spec.family == "14a":
        a1, a2 = float(c["alpha1"]), float(c["alpha2"])
        return MomentSummary(a1**2, a2**2, a1 * a2, a1, a2, 1.0, mu, 0)
    if spec.family == "14b":
        a2 = float(c["alpha2"])
        return MomentSummary(0.0, a2**2, 0.0, 0.0, a2, 1.0, mu, 0)
    raise RegimeMismatch(f"no nominal variance formula for family {spec.family}")


def nominal_variances(spec: SyntheticModelSpec, n: int, mcm_centering: str = "design") -> dict:
    """Nominal variances per estimator; ``None`` where no formula applies."""
    if spec.noise_sd > 0:
        raise RegimeMismatch("nominal formulas assume noiseless outcomes")
    mom = population_moments(spec)
    p = spec.p
    if spec.family == "14b":
        return linear_effect_variances(float(spec.coefficients["alpha2"]),
                                 float(spec.covariate_mean[0]), p, n, mcm_centering)
    return {
        "slr": slr_variance_nominal(mom, p, n),
        "mlr": mlr_variance_nominal(mom, p, n),
        "mcm": None,
    }


def theory_vs_empirical(spec, p, n, replications, master_seed=0, workers=1, mcm_centering="design"):
    """Nominal versus simulated error variance for each estimator.

    The MCM formula assumes the modified covariates are centered with the
    assignment probability; pass ``mcm_centering="empirical"`` to compare the
    empirical-centering variant instead.
    """
    spec = spec.with_p(float(p))
    nominal = nominal_variances(spec, n, mcm_centering)
    rep = run_monte_carlo(McConfig(spec, (n,), replications, master_seed,
                                   STANDARD, mcm_centering, workers))
    out = []
    for m in STANDARD:
        emp = rep.get(m, n).error_variance
        err = rep.errors(m, n)
        err = err[np.isfinite(err)]
        dev = (err - err.mean()) ** 2
        se = float(dev.std(ddof=1) / math.sqrt(dev.size)) if dev.size > 2 else math.nan
        nom = nominal[m]
        rel = abs(emp - nom) / nom if nom is not None and nom > 0 else None
        out.append(TheoryComparison(m, nom, emp, rel, se))
    return out, rep
