import math

import numpy as np
import pytest

from ulacov import oracles, planner
from ulacov.errors import ConfigurationError, InputError
from ulacov.estimators import operator_norm
from ulacov.potentials import PotentialSpec

ISO1 = PotentialSpec.gaussian_iso(1.0, 1)


def test_stationary_cov_scalar():
    # fixed point of c = (1 - alpha*eta)^2 c + 2 eta
    c = oracles.gaussian_ula_stationary_cov(ISO1, 0.1)
    assert c[0, 0] == pytest.approx(0.2 / (1 - 0.81), rel=1e-13)
    assert c[0, 0] == pytest.approx(1.0526315789473684, rel=1e-13)


def test_stationary_cov_closed_form_and_limit():
    lam = np.array([0.5, 1.0, 3.0])
    p = PotentialSpec.gaussian_diag(lam)
    for eta in (0.2, 0.05, 1e-3):
        c = oracles.gaussian_ula_stationary_cov(p, eta)
        closed = np.diag(1.0 / (lam - 0.5 * eta * lam**2))
        assert np.allclose(c, closed, rtol=1e-12, atol=1e-14)
        assert np.all(np.diag(c) >= 1.0 / lam)
    c = oracles.gaussian_ula_stationary_cov(p, 1e-7)
    assert np.allclose(c, np.diag(1.0 / lam), rtol=1e-6)


def test_stationary_cov_unavailable_or_invalid():
    assert oracles.gaussian_ula_stationary_cov(PotentialSpec.logcosh(1.0, 2.0, 2), 0.1) is None
    with pytest.raises(ConfigurationError):
        oracles.gaussian_ula_stationary_cov(PotentialSpec.gaussian_iso(2.0, 1), 0.5)


def test_ar1_examples():
    s1 = oracles.AR1Spec.from_ula(1.0, 0.1, 1)
    var = 1.0 / (1.0 - 0.05)
    assert s1.stationary_var == pytest.approx(var, rel=1e-14)
    assert np.allclose(oracles.ar1_autocovariance(s1), [[var]], rtol=1e-14)
    t2 = oracles.ar1_autocovariance(oracles.AR1Spec.from_ula(1.0, 0.1, 2))
    assert np.allclose(t2, var * np.array([[1.0, 0.9], [0.9, 1.0]]), rtol=1e-14)
    with pytest.raises(ConfigurationError):
        oracles.AR1Spec(1.0, 1.0, 3)
    with pytest.raises(ConfigurationError):
        oracles.ar1_autocovariance(oracles.AR1Spec(0.5, 1.0, oracles.AR1_MAX_N + 1))


def test_ar1_tightness():
    limit = planner.joint_lsi(1.0, 0.1)
    lam = oracles.ar1_top_eigenvalue(oracles.AR1Spec.from_ula(1.0, 0.1, 2000))
    assert abs(lam - limit) <= 0.01 * limit
    assert lam <= limit
    seq = [oracles.ar1_top_eigenvalue(oracles.AR1Spec.from_ula(1.0, 0.1, n)) for n in (1, 4, 16, 64, 256)]
    assert all(b > a for a, b in zip(seq, seq[1:]))
    t = oracles.ar1_autocovariance(oracles.AR1Spec.from_ula(1.0, 0.1, 50))
    assert oracles.ar1_top_eigenvalue(oracles.AR1Spec.from_ula(1.0, 0.1, 50)) == pytest.approx(
        operator_norm(t), rel=1e-12)


def test_ar1_mean_variance_closed_form():
    # sum of the Toeplitz entries in closed form
    spec = oracles.AR1Spec.from_ula(1.0, 0.1, 37)
    r, n = spec.rho, spec.n
    total = n * (1 + r) / (1 - r) - 2 * r * (1 - r**n) / (1 - r) ** 2
    assert oracles.ar1_mean_variance(spec) == pytest.approx(spec.stationary_var * total / n**2, rel=1e-12)


def test_w2_examples():
    eye = np.eye(2)
    assert oracles.gaussian_w2([0, 0], eye, [0, 0], eye) == pytest.approx(0.0, abs=1e-7)
    for sigma in (0.3, 1.0, 2.5):
        assert oracles.gaussian_w2([0.0], [[1.0]], [0.0], [[sigma**2]]) == pytest.approx(abs(1 - sigma), abs=1e-7)
    assert oracles.gaussian_w2([0, 0], eye, [1, 0], np.diag([4.0, 1.0])) == pytest.approx(math.sqrt(2), rel=1e-12)


def test_w2_non_commuting_matches_independent_formula():
    import scipy.linalg

    rng = np.random.default_rng(0)
    a, b = rng.normal(size=(2, 3, 3))
    s1, s2 = a @ a.T + 0.1 * np.eye(3), b @ b.T + 0.1 * np.eye(3)
    r1 = scipy.linalg.sqrtm(s1).real
    ref = np.sqrt(np.trace(s1 + s2 - 2 * scipy.linalg.sqrtm(r1 @ s2 @ r1).real))
    assert oracles.gaussian_w2(np.zeros(3), s1, np.zeros(3), s2) == pytest.approx(ref, rel=1e-8)


def test_w2_rejects_non_psd():
    with pytest.raises(InputError):
        oracles.gaussian_w2([0.0], [[-1.0]], [0.0], [[1.0]])


def test_bound_moment_examples():
    p = PotentialSpec.gaussian_iso(2.0, 4)
    assert oracles.bound_moment(p, clause="a") == 2.0
    assert oracles.bound_moment(p, 0.1, clause="b") == 4.0
    x0 = np.array([1.0, 0.0, -2.0, 0.5])
    assert oracles.bound_moment(p, 0.1, "c", i=0, x0=x0) == pytest.approx(float(x0 @ x0))
    assert oracles.bound_moment(p, 0.1, "c", i=np.inf, x0=x0) == oracles.bound_moment(p, 0.1, "b")
    with pytest.raises(InputError):
        oracles.bound_moment(p, 0.1, "c")


def test_bound_w2_examples():
    assert oracles.bound_w2(ISO1, 0.01, "a") == pytest.approx(4 * 0.01 * (2 + 0.01 + 0.0001 / 6), rel=1e-14)
    assert oracles.bound_w2(ISO1, 0.01, "a") == pytest.approx(0.080400, abs=1e-6)
    assert oracles.bound_w2(ISO1, 0.01, "b", i=0, x0=[0.0]) == 2.0
    # geometric decay: a real-valued step count of log 2 / log(1/(1-alpha*eta)) halves the bound
    half = math.log(2) / -math.log1p(-0.01)
    start = oracles.bound_w2(ISO1, 0.01, "b", i=0, x0=[1.0])
    assert oracles.bound_w2(ISO1, 0.01, "b", i=half, x0=[1.0]) == pytest.approx(start / 2, rel=1e-12)
    assert oracles.bound_w2(ISO1, 0.01, "b", i=2 * half, x0=[1.0]) == pytest.approx(start / 4, rel=1e-12)


def test_bound_cov_diff_examples():
    assert oracles.bound_cov_diff(1.0, 4.0, 0.0) == 0.0
    assert oracles.bound_cov_diff(1.0, 1.0, 0.5) == 2.0
    assert oracles.bound_cov_diff(1.0, 1.0, 0.5, centred_only=True) == 1.0
    for sigma in (0.5, 1.0, 3.0):
        b = oracles.bound_cov_diff(1.0, sigma**2, abs(1 - sigma))
        assert b == pytest.approx(2 * abs(1 - sigma**2))
        assert b >= abs(1 - sigma**2)
    with pytest.raises(InputError):
        oracles.bound_cov_diff(-1.0, 1.0, 1.0)


def test_poincare_bound():
    assert oracles.poincare_mean_bound(20.0, 100) == pytest.approx(0.2)
    assert oracles.poincare_mean_bound(20.0, 10**12) < 1e-10
    with pytest.raises(InputError):
        oracles.poincare_mean_bound(20.0, 0)
    c = planner.joint_lsi(1.0, 0.1)
    for n in range(1, 501):
        v = oracles.ar1_mean_variance(oracles.AR1Spec.from_ula(1.0, 0.1, n))
        assert v <= oracles.poincare_mean_bound(c, n)


@pytest.mark.parametrize("lam", [[1.0], [1.0, 2.0], [0.5, 1.0, 4.0]])
@pytest.mark.parametrize("eta", [1e-3, 1e-2, 0.1])
def test_bias_domination(lam, eta):
    p = PotentialSpec.gaussian_diag(lam)
    if eta >= 1.0 / p.beta:
        pytest.skip("step too large for this precision")
    c_eta = oracles.gaussian_ula_stationary_cov(p, eta)
    c = p.true_covariance()
    gap = operator_norm(c_eta - c)
    w2 = oracles.gaussian_w2(p.minimizer, c_eta, p.minimizer, c)
    exact = oracles.bound_cov_diff(np.trace(c_eta), np.trace(c), w2)
    assert gap <= exact
    assert w2**2 <= oracles.bound_w2(p, eta, "a")
    assert gap <= oracles.discretization_bias_bound(p, eta)
