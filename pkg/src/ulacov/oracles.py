"""Closed-form ground truths and bound evaluators.

Gaussian targets make ULA linear, so its stationary covariance, the AR(1)
autocovariance of a one-dimensional chain and Gaussian Wasserstein distances
are all available exactly. The ``bound_*`` functions evaluate the moment,
Wasserstein and covariance-difference bounds that the error analysis chains
together, so the chain can be compared against the exact quantities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import ConfigurationError, InputError
from .potentials import PotentialSpec

AR1_MAX_N = 4096
_CLAMP = 1e-12


@dataclass(frozen=True)
class AR1Spec:
    """Y_{i+1} = rho * Y_i + sqrt(innovation_var) * Z, observed over n steps."""

    rho: float
    innovation_var: float
    n: int

    def __post_init__(self):
        if not abs(self.rho) < 1:
            raise ConfigurationError(f"AR(1) needs |rho| < 1, got {self.rho}")
        if self.n < 1:
            raise ConfigurationError("n must be >= 1")

    @classmethod
    def from_ula(cls, alpha, eta, n):
        """The 1D ULA chain on f(x) = alpha x^2 / 2."""
        return cls(1.0 - alpha * eta, 2.0 * eta, int(n))

    @property
    def stationary_var(self):
        return self.innovation_var / (1.0 - self.rho**2)


def gaussian_ula_stationary_cov(potential: PotentialSpec, eta):
    """Cov(pi_eta) for a Gaussian target, or None for other kinds.

    Solves C = (I - eta*L) C (I - eta*L) + 2*eta*I as a discrete Lyapunov
    equation rather than using the closed form, which tests check against.
    """
    if not potential.is_gaussian:
        return None
    if not 0 < eta < 1.0 / potential.beta:
        raise ConfigurationError(f"need 0 < eta < 1/beta, got eta={eta}")
    lam = potential.precision()
    a = np.eye(potential.dim) - eta * lam
    c = linalg.solve_discrete_lyapunov(a, 2.0 * eta * np.eye(potential.dim))
    return 0.5 * (c + c.T)


def ar1_autocovariance(spec: AR1Spec):
    """n x n Toeplitz matrix with entries var * rho^|i-j|."""
    if spec.n > AR1_MAX_N:
        raise ConfigurationError(f"n={spec.n} exceeds the dense limit {AR1_MAX_N}")
    col = spec.stationary_var * spec.rho ** np.arange(spec.n)
    return linalg.toeplitz(col)


def ar1_top_eigenvalue(spec: AR1Spec):
    t = ar1_autocovariance(spec)
    return float(linalg.eigvalsh(t, subset_by_index=[spec.n - 1, spec.n - 1])[0])


def ar1_mean_variance(spec: AR1Spec):
    """Var of the average of n stationary AR(1) values, 1^T T 1 / n^2."""
    t = ar1_autocovariance(spec)
    return float(t.sum() / spec.n**2)


def psd_sqrt(s):
    """Symmetric square root with eigenvalues clamped at zero."""
    s = np.asarray(s, dtype=float)
    s = 0.5 * (s + s.T)
    w, v = linalg.eigh(s)
    scale = max(1.0, float(np.max(np.abs(w)))) if w.size else 1.0
    if w.size and w[0] < -_CLAMP * scale:
        raise InputError(f"matrix is not positive semi-definite (eigenvalue {w[0]:.3e})")
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.T


def gaussian_w2(m1, s1, m2, s2):
    """2-Wasserstein distance between N(m1, s1) and N(m2, s2) (Bures formula)."""
    m1, m2 = np.atleast_1d(np.asarray(m1, float)), np.atleast_1d(np.asarray(m2, float))
    s1, s2 = np.atleast_2d(np.asarray(s1, float)), np.atleast_2d(np.asarray(s2, float))
    r1 = psd_sqrt(s1)
    cross = psd_sqrt(r1 @ s2 @ r1)
    # psd_sqrt validated s1; s2 is checked through its own root
    psd_sqrt(s2)
    gap = float(np.trace(s1) + np.trace(s2) - 2.0 * np.trace(cross))
    return float(np.sqrt(np.sum((m1 - m2) ** 2) + max(gap, 0.0)))


def _contraction(potential, eta):
    if not 0 < eta < 1.0 / potential.beta:
        raise ConfigurationError(f"need 0 < eta < 1/beta, got eta={eta}")
    return 1.0 - potential.alpha * eta


def _msd0(potential, x0):
    x0 = np.asarray(x0, dtype=float).ravel()
    if x0.size != potential.dim:
        raise InputError(f"x0 has length {x0.size}, expected {potential.dim}")
    return float(np.sum((x0 - potential.minimizer) ** 2))


def bound_moment(potential, eta=None, clause="a", i=None, x0=None):
    """Upper bound on E|X - x*|^2.

    clause ``a``: under pi; ``b``: under pi_eta; ``c``: after ``i`` ULA steps
    from ``x0`` (``i=np.inf`` gives the stationary limit).
    """
    d, a = potential.dim, potential.alpha
    if clause == "a":
        return d / a
    if clause == "b":
        _contraction(potential, eta)
        return 2.0 * d / a
    if clause == "c":
        if i is None or x0 is None:
            raise InputError("clause (c) needs the step count i and start x0")
        r = _contraction(potential, eta) ** i
        return r * _msd0(potential, x0) + 2.0 * (d / a) * (1.0 - r)
    raise InputError(f"unknown clause {clause!r}")


def bound_w2(potential, eta, clause="a", i=None, x0=None):
    """Upper bound on a squared 2-Wasserstein distance.

    clause ``a``: W2^2(pi_eta, pi); ``b``: W2^2(law of X_i from x0, pi_eta).
    """
    d, a, b = potential.dim, potential.alpha, potential.beta
    r = _contraction(potential, eta)
    if clause == "a":
        return 4.0 * (b / a) ** 2 * eta * (2 * d + d**2 * b**2 * eta / a + d**2 * eta**2 / 6.0)
    if clause == "b":
        if i is None or x0 is None:
            raise InputError("clause (b) needs the step count i and start x0")
        return r**i * (_msd0(potential, x0) + 2.0 * d / a)
    raise InputError(f"unknown clause {clause!r}")


def bound_cov_diff(msd1, msd2, w2, centred_only=False):
    """Bound on ||Cov(mu) - Cov(nu)|| from second moments about a common centre.

    With ``centred_only`` the factor 2 is dropped, giving the bound on the
    difference of second-moment matrices about that centre.
    """
    if min(msd1, msd2, w2) < 0:
        raise InputError("second moments and W2 must be non-negative")
    factor = 1.0 if centred_only else 2.0
    return factor * (np.sqrt(msd1) + np.sqrt(msd2)) * w2


def poincare_mean_bound(lsi_joint, n):
    """Bound C/n on the covariance norm of a sample mean of n vectors."""
    if n < 1:
        raise InputError("n must be >= 1")
    if lsi_joint < 0:
        raise InputError("the constant must be non-negative")
    return lsi_joint / n


def discretization_bias_bound(potential, eta):
    """Chain the moment, Wasserstein and covariance-difference bounds for ||Cov(pi_eta) - Cov(pi)||."""
    w2 = np.sqrt(bound_w2(potential, eta, "a"))
    return bound_cov_diff(bound_moment(potential, eta, "b"), bound_moment(potential, eta, "a"), w2)
