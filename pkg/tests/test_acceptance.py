"""End-to-end acceptance checks, one test per criterion.

Each test appends a PASS/FAIL line that is printed in the terminal summary.
Monte Carlo budgets are the full ones, so this module takes a few minutes.
"""

import json
import math
import subprocess
import sys
import time

import numpy as np
import pytest
from scipy import integrate

from conftest import ACCEPTANCE_LINES
from dr_ate.data_io import Dataset, load_csv
from dr_ate.estimators import estimate
from dr_ate.monte_carlo import McConfig, run_monte_carlo, theory_vs_empirical
from dr_ate.regression import solve_least_squares
from dr_ate.significance import significance
from dr_ate.synthetic import SyntheticModelSpec, load_default_spec
from dr_ate.variance_theory import MomentSummary, delta, delta_value

pytestmark = pytest.mark.slow

REPS = 10_000


def record(criterion, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def unit_moments(cf, cg):
    return MomentSummary(1.0, 1.0, 0.0, cf, cg, 1.0, 0.0, 0)


def test_1_delta_special_cases():
    start = time.perf_counter()
    r = np.random.default_rng(1)
    worst = 0.0
    ok = True
    for cf, p in zip(r.normal(0, 3, 100), r.uniform(0.01, 0.99, 100)):
        d = delta(unit_moments(cf, 0.0), p).delta
        ok &= d >= 0
        worst = max(worst, abs(d - cf**2))
    for cf, cg in r.normal(0, 3, (100, 2)):
        d = delta(unit_moments(cf, cg), 0.5).delta
        ok &= d >= 0
        worst = max(worst, abs(d - (cf + 0.5 * cg) ** 2))
    elapsed = time.perf_counter() - start
    ok &= worst <= 1e-9 and elapsed < 1.0
    record(1, ok, f"200 draws non-negative, max |delta - square| = {worst:.1e}, {elapsed:.3f}s")


def test_2_boundary():
    start = time.perf_counter()
    root = max(delta(unit_moments(0.3, 1.0), 0.5).roots)
    below, above = delta_value(0.3, 1.0, 0.76), delta_value(0.3, 1.0, 0.78)
    ok = abs(root - 2.3 / 3) <= 1e-9 and round(root, 2) == 0.77 and below > 0 > above
    ok &= time.perf_counter() - start < 1.0
    record(2, ok, f"upper root {root:.10f} (2.3/3 = {2.3 / 3:.10f})")


def _margin(rep, worse, better, n):
    diff, se = rep.variance_difference(worse, better, n)
    return diff, se, diff / se


def test_3_orderings():
    n = 1000
    lines, ok = [], True
    rep = run_monte_carlo(McConfig(load_default_spec("14a"), (n,), REPS, master_seed=3))
    for other in ("mlr", "mcm"):
        diff, se, z = _margin(rep, other, "slr", n)
        ok &= z > 3
        lines.append(f"14a {other}-slr={diff:.4g} ({z:.1f} SE)")
    rep = run_monte_carlo(McConfig(load_default_spec("14b"), (n,), REPS, master_seed=3))
    for other in ("slr", "mlr"):
        diff, se, z = _margin(rep, other, "mcm", n)
        ok &= z > 3
        lines.append(f"14b {other}-mcm={diff:.4g} ({z:.1f} SE)")
    record(3, ok, "; ".join(lines))


def test_4_linear_effect_formulas():
    spec = load_default_spec("14b")
    parts, ok = [], True
    for p in (0.2, 0.5, 0.8):
        comps, _ = theory_vs_empirical(spec, p, 2000, REPS, master_seed=4, mcm_centering="design")
        by = {c.estimator: c for c in comps}
        for m in ("slr", "mcm"):
            ok &= by[m].relative_error <= 0.2
        parts.append(f"p={p}: slr {by['slr'].relative_error:.3f}, mcm {by['mcm'].relative_error:.3f}")
        if p == 0.5:
            ratio = by["mlr"].empirical / by["slr"].empirical
            ok &= ratio < 0.1
            parts.append(f"mlr/slr at 0.5 = {ratio:.4f}")
    record(4, ok, "relative errors " + "; ".join(parts))


def test_5_model28_ranking():
    spec = load_default_spec("28")
    n = 1000
    expected = {0.1: "mcm", 0.5: "mlr", 0.9: "slr"}
    parts, ok = [], True
    for p, best in expected.items():
        rep = run_monte_carlo(McConfig(spec.with_p(p), (n,), REPS, master_seed=5))
        ev = {m: rep.get(m, n).error_variance for m in ("slr", "mlr", "mcm")}
        order = sorted(ev, key=ev.get)
        diff, se = rep.variance_difference(order[1], order[0], n)
        ok &= order[0] == best
        parts.append(f"p={p}: {'<'.join(order)} (runner-up margin {diff / se:.1f} SE)")
    record(5, ok, "; ".join(parts))


def test_6_nonlinear_main_effect():
    n = 1000
    # (a) constant treatment effect, quartic-root main effect
    rep = run_monte_carlo(McConfig(load_default_spec("const_effect").with_p(0.5), (n,), REPS,
                                   master_seed=6))
    diff_a, se_a = rep.variance_difference("slr", "mlr", n)
    ok_a = diff_a > 2 * se_a
    # (b) linear treatment effect anti-aligned with the main effect's trend
    spec_b = SyntheticModelSpec("29d", 1, {"theta": [-1.0]}, [1.0], 0.15)
    rep = run_monte_carlo(McConfig(spec_b, (n,), REPS, master_seed=6))
    slr = rep.get("slr", n).error_variance
    diff_b, se_b = rep.variance_difference("mlr", "slr", n)
    diff_c, se_c = rep.variance_difference("mcm", "slr", n)
    ok_b = diff_b > 2 * se_b
    ok_c = diff_c + 2 * se_c < 0.05 * slr
    record(6, ok_a and ok_b and ok_c,
           f"(a) slr-mlr={diff_a:.3g} ({diff_a / se_a:.1f} SE); "
           f"(b) mlr-slr={diff_b:.3g} ({diff_b / se_b:.1f} SE), "
           f"mcm/slr={1 + diff_c / slr:.3f} (mcm-slr {diff_c / se_c:.1f} SE)")


def _t_tail(t, dof):
    logc = math.lgamma((dof + 1) / 2) - math.lgamma(dof / 2) - 0.5 * math.log(dof * math.pi)
    val, _ = integrate.quad(lambda s: math.exp(logc - (dof + 1) / 2 * math.log1p(s * s / dof)),
                            abs(t), math.inf, epsabs=1e-13, epsrel=1e-12)
    return 2 * val


def _f_tail(f, d1, d2):
    logb = math.lgamma(d1 / 2) + math.lgamma(d2 / 2) - math.lgamma((d1 + d2) / 2)

    def pdf(x):
        return math.exp(0.5 * (d1 * math.log(d1 * x) + d2 * math.log(d2)
                               - (d1 + d2) * math.log(d1 * x + d2)) - math.log(x) - logb)

    val, _ = integrate.quad(pdf, f, math.inf, epsabs=1e-13, epsrel=1e-12)
    return val


def test_7_significance(fixture8_path):
    start = time.perf_counter()
    r = np.random.default_rng(7)
    worst_ft = 0.0
    for i in range(400):
        n = int(r.integers(4, 60))
        t = np.zeros(n)
        t[: int(r.integers(1, n))] = 1
        x = r.standard_normal((n, 1)) + r.normal()
        y = r.standard_normal(n) + r.normal() * t
        rep = significance(estimate(Dataset(y, t, x), "slr" if i % 2 else "mcm"))
        worst_ft = max(worst_ft, abs(rep.f_statistic - rep.t_statistic**2) / max(1.0, rep.f_statistic))
    data = load_csv(fixture8_path)
    worst_q = 0.0
    for m in ("slr", "mlr", "mcm"):
        rep = significance(estimate(data, m))
        worst_q = max(worst_q,
                      abs(rep.t_p_value - _t_tail(rep.t_statistic, rep.dof_residual)),
                      abs(rep.f_p_value - _f_tail(rep.f_statistic, rep.dof_model, rep.dof_residual)))
    pvals = []
    for _ in range(2000):
        t = (np.arange(30) % 2).astype(float)
        r.shuffle(t)
        ds = Dataset(r.standard_normal(30), t, r.standard_normal((30, 1)))
        pvals.append(significance(estimate(ds, "mlr")).t_p_value)
    pvals = np.sort(pvals)
    grid = np.arange(1, 2001) / 2000
    ks = max(np.max(grid - pvals), np.max(pvals - (grid - 1 / 2000)))
    elapsed = time.perf_counter() - start
    ok = worst_ft <= 1e-9 and worst_q <= 1e-6 and ks <= 0.05 and elapsed < 60
    record(7, ok, f"F-t^2 {worst_ft:.1e}, quadrature gap {worst_q:.1e}, KS {ks:.4f}, {elapsed:.1f}s")


def test_8_solver_oracle():
    start = time.perf_counter()
    r = np.random.default_rng(8)
    worst = 0.0
    for _ in range(500):
        q = int(r.integers(1, 5))
        n = int(r.integers(q + 1, 200))
        W = r.standard_normal((n, q)) * r.uniform(0.1, 10, q) + r.normal(0, 2, q)
        y = r.standard_normal(n) * 5
        oracle = np.linalg.inv(W.T @ W) @ W.T @ y
        beta = solve_least_squares(W, y).beta_hat
        worst = max(worst, np.linalg.norm(beta - oracle) / np.linalg.norm(oracle))
    elapsed = time.perf_counter() - start
    record(8, worst <= 1e-8 and elapsed < 10, f"max relative gap {worst:.1e} over 500 systems, {elapsed:.2f}s")


def test_9_determinism(tmp_path):
    args = ["simulate", "--family", "14b", "--p", "0.25", "--n", "1000", "--reps", "5000",
            "--seed", "7", "--format", "json"]
    outs = []
    for w in (1, 8):
        dest = tmp_path / f"w{w}.json"
        res = subprocess.run([sys.executable, "-m", "dr_ate", *args, "--workers", str(w),
                              "--output", str(dest)], capture_output=True, text=True)
        assert res.returncode == 0, res.stderr
        outs.append(dest.read_bytes())
    ev = {e["estimator"]: e["error_variance"] for e in json.loads(outs[0])["results"]}
    record(9, outs[0] == outs[1] and ev["mcm"] < min(ev["slr"], ev["mlr"]),
           f"workers 1 vs 8 byte-identical={outs[0] == outs[1]} ({len(outs[0])} bytes)")
