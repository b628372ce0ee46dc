"""Acceptance criteria, each checked at its stated tolerance and time budget.

Every test prints one ``PASS``/``FAIL`` line (visible with or without ``-s``).
"""

import math
import time

import numpy as np
import pytest
from scipy import stats

from ulacov import oracles, planner
from ulacov.estimators import operator_norm, sample_moments
from ulacov.harness import ExperimentConfig, rate_sweep, run_experiment
from ulacov.potentials import PotentialSpec
from ulacov.sampler import ChainParams, run_parallel


@pytest.fixture
def report(capsys):
    def emit(number, name, ok, detail, seconds, budget):
        ok = bool(ok) and seconds < budget
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {name}: {detail} [{seconds:.3f}s < {budget}s]"
        with capsys.disabled():
            print("\n" + line)
        return ok
    return emit


def test_01_planner_exact(report):
    delta = 4 / math.e
    planner.plan_single(1, 1, 1, 1, 0.1)  # warm caches
    t0 = time.perf_counter()
    with pytest.warns(UserWarning):
        single = planner.plan_single(1, 1, 1, 1, delta)
    with pytest.warns(UserWarning):
        par = planner.plan_parallel(1, 1, 1, 1, delta)
    dt = time.perf_counter() - t0
    # independent evaluation with exact rationals: log(4/delta) = 1 here
    ok = (single.eta == 1 / 2700 and single.n_or_N == 4608 * 2700 * 13 == 161_740_800
          and par.n_or_N == 2304 * 13 == 29_952)
    assert report(1, "planner exactness", ok,
                  f"eta={single.eta!r} n={single.n_or_N} N={par.n_or_N}", dt, 1e-3)


def test_02_ar1_tightness(report):
    t0 = time.perf_counter()
    sizes = [64, 256, 1024, 2048]
    lams = [oracles.ar1_top_eigenvalue(oracles.AR1Spec.from_ula(1.0, 0.1, n)) for n in sizes]
    dt = time.perf_counter() - t0
    limit = planner.joint_lsi(1.0, 0.1)
    rel = abs(lams[-1] - limit) / limit
    monotone = all(b > a for a, b in zip(lams, lams[1:]))
    assert report(2, "AR(1) LSI tightness", rel <= 0.01 and monotone,
                  f"lambda_max(2048)={lams[-1]:.5f} rel.gap={rel:.2e} monotone={monotone}", dt, 30)


def test_03_gaussian_stationary_law(report):
    p = PotentialSpec.gaussian_iso(1.0, 2)
    eta = 0.05
    t0 = time.perf_counter()
    # each chain retains a single iterate, so the burn-in is sized for n = 1
    m = planner.theorem1_burnin(1.0, eta, 0.0, 0.0, 2, 1)
    block = run_parallel(p, ChainParams(eta, burn_in=m, n=100_000, seed=2024))
    cov = sample_moments(block).covariance
    dt = time.perf_counter() - t0
    lam = p.precision()
    target = np.linalg.inv(lam - 0.5 * eta * lam @ lam)
    err = operator_norm(cov - target)
    assert report(3, "Gaussian ULA stationary law", err <= 0.05,
                  f"m={m} ||cov - (L - eta/2 L^2)^-1||={err:.4f} (tol 0.05)", dt, 60)


def test_04_concentration_rate(report):
    t0 = time.perf_counter()
    sweep = rate_sweep(PotentialSpec.gaussian_iso(1.0, 1), 0.1, 100, [10**3, 10**4, 10**5, 10**6], 50,
                       base_seed=7)
    dt = time.perf_counter() - t0
    assert report(4, "concentration rate", -0.65 <= sweep.slope <= -0.35,
                  f"slope={sweep.slope:.4f} (window [-0.65, -0.35])", dt, 300)


def test_05_bias_bound_domination(report):
    t0 = time.perf_counter()
    worst = 0.0
    ok = True
    for d in (1, 2, 4):
        p = PotentialSpec.gaussian_diag(np.linspace(1.0, 4.0, d) if d > 1 else [1.0])
        for eta in (1e-3, 1e-2):
            gap = operator_norm(oracles.gaussian_ula_stationary_cov(p, eta) - p.true_covariance())
            bound = oracles.discretization_bias_bound(p, eta)
            ok &= gap < bound
            worst = max(worst, gap / bound)
    dt = time.perf_counter() - t0
    assert report(5, "bias-bound domination", ok, f"max gap/bound={worst:.3e} over 6 grid points", dt, 1)


def test_06_poincare_mean_bound(report):
    t0 = time.perf_counter()
    c = planner.joint_lsi(1.0, 0.1)
    worst = 0.0
    for n in range(1, 501):
        v = oracles.ar1_mean_variance(oracles.AR1Spec.from_ula(1.0, 0.1, n))
        worst = max(worst, v / oracles.poincare_mean_bound(c, n))
    dt = time.perf_counter() - t0
    assert report(6, "Poincare mean bound", worst <= 1.0, f"max Var/bound={worst:.5f} over n=1..500", dt, 1)


def test_07_triangle_decomposition(report):
    p = PotentialSpec.gaussian_diag([1.0, 2.0])
    t0 = time.perf_counter()
    res = run_experiment(ExperimentConfig(p, "single", 0.05, 50, 5000, replications=200, base_seed=3))
    dt = time.perf_counter() - t0
    slack = max(r.err_total - (r.err_disc + r.err_nonstat + r.err_var) for r in res.records)
    ok = len(res.records) == 200 and all(r.triangle_holds(1e-9) for r in res.records)
    assert report(7, "triangle decomposition", ok,
                  f"200 records, max(total - sum of terms)={slack:.3e}", dt, 120)


def test_08_scaled_coverage(report):
    p = PotentialSpec.gaussian_iso(1.0, 1)
    plan = planner.plan_for(p, "single", 0.25, 0.2, relax=1e-3)
    cfg = ExperimentConfig.from_plan(p, plan, replications=200, base_seed=8, max_grad_evals=math.inf)
    t0 = time.perf_counter()
    res = run_experiment(cfg)
    dt = time.perf_counter() - t0
    cov = res.summary["coverage"]
    assert report(8, "scaled coverage", cov >= 0.8,
                  f"coverage={cov:.3f} (n={plan.n_or_N}, m={plan.m}, eta={plan.eta:.4e}, R=200)", dt, 600)


def test_09_determinism(report):
    p = PotentialSpec.logcosh(1.0, 2.0, 2)
    g = PotentialSpec.gaussian_iso(1.0, 2)
    t0 = time.perf_counter()
    ok = True
    for pot in (p, g):
        for mode, size in (("single", 3000), ("parallel", 500)):
            def csv(workers):
                return run_experiment(ExperimentConfig(pot, mode, 0.05, 30, size, replications=8, base_seed=9,
                                                       workers=workers, reference_n=50_000)).to_csv()
            base = csv(1)
            ok &= base == csv(1) == csv(3) == csv(8)
    dt = time.perf_counter() - t0
    assert report(9, "determinism", ok, "CSV bytes identical across reruns and 1/3/8 workers", dt, 60)


def test_10_log_factor(report):
    t0 = time.perf_counter()
    x, y = [], []
    for d in range(1, 17):
        for k in range(1, 7):
            eps = 2.0**-k
            x.append(math.log(d / eps))
            y.append(planner.mode_ratio(1.0, 1.0, d, eps, 0.1))
    fit = stats.linregress(x, y)
    dt = time.perf_counter() - t0
    r2 = fit.rvalue**2
    assert report(10, "log-factor comparison", r2 >= 0.95,
                  f"R^2={r2:.6f} slope={fit.slope:.4f} over 96 (d, eps) pairs", dt, 1)
