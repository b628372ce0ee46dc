"""Step size, burn-in and sample size prescriptions for covariance estimation.

All burn-in thresholds use the exact ``log(1/(1 - alpha*eta))`` rather than
its linear lower bound, and every integer output is the ceiling of the real
threshold it must exceed.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

from .errors import ConfigurationError

SINGLE = "single"
PARALLEL = "parallel"

ETA_DENOM = 2700
N_SINGLE_CONST = 2**9 * 3**2  # 4608
N_PARALLEL_CONST = 2**8 * 3**2  # 2304

# Relative slack when rounding a threshold up: values within a few ulps of
# an integer are treated as that integer.
_CEIL_RTOL = 1e-12


def ceil_threshold(x):
    r = round(x)
    if abs(x - r) <= _CEIL_RTOL * max(1.0, abs(x)):
        return int(r)
    return int(math.ceil(x))


def log_contraction(alpha, eta):
    """log(1 / (1 - alpha*eta)), computed without cancellation."""
    return -math.log1p(-alpha * eta)


def _clause(numerator_arg, alpha, eta, scale=1.0):
    """ceil(scale * log(arg) / log(1/(1-alpha*eta)) - 1), with log 0 = -inf, clipped at 0."""
    if numerator_arg <= 0:
        return 0
    val = scale * math.log(numerator_arg) / log_contraction(alpha, eta) - 1.0
    return max(0, ceil_threshold(val))


def eta_max(alpha, beta, d, epsilon):
    return alpha**3 * epsilon**2 / (ETA_DENOM * beta**2 * d**2)


def joint_lsi(alpha, eta):
    """LSI constant of the joint law of post-burn-in iterates."""
    return 2.0 / (alpha**2 * eta)


def marginal_lsi(kappa0, alpha, eta, i):
    """LSI constant of the law of X_i started from an LSI(kappa0) law."""
    if i < 0:
        raise ConfigurationError("step index must be >= 0")
    r = (1.0 - alpha * eta) ** (2 * i)
    return r * kappa0 + (1.0 - r) * (2.0 / alpha)


def theorem1_burnin(alpha, eta, kappa0, init_msd, d, n, beta=None):
    """Smallest burn-in for the single-chain concentration bound.

    Maximum of ``log(kappa0/eta)`` and ``log(4(init_msd + d/alpha)/(eta n))``
    over ``log(1/(1-alpha*eta))``, each minus one, and zero.
    """
    if beta is not None and eta >= 1.0 / beta:
        raise ConfigurationError(f"step size {eta} violates eta < 1/beta = {1.0 / beta}")
    if kappa0 < 0 or init_msd < 0:
        raise ConfigurationError("kappa0 and init_msd must be non-negative")
    if n < 1:
        raise ConfigurationError("n must be >= 1")
    first = _clause(kappa0 / eta, alpha, eta)
    second = _clause(4.0 * (init_msd + d / alpha) / (eta * n), alpha, eta)
    return max(first, second)


def concentration_bound(alpha, eta, d, n, delta, form="statement"):
    """Deviation bound on ||Sigma_hat - E Sigma_hat|| holding w.p. 1 - 4 delta.

    ``form="statement"`` carries the inner factor 8 in front of the square
    root; ``form="proof"`` is the sharper sqrt(2 ...) version the argument
    actually delivers.
    """
    k = (9 * d + 4 * math.log(1.0 / delta)) / (alpha * eta * n)
    if form == "statement":
        return 16.0 / alpha * max(8.0 * math.sqrt(k), k)
    if form == "proof":
        return 16.0 / alpha * max(math.sqrt(2.0 * k), k)
    raise ConfigurationError(f"unknown bound form {form!r}")


def parallel_concentration_bound(alpha, d, N, delta):
    """Deviation bound on ||Sigma_tilde - E Sigma_tilde|| holding w.p. 1 - 4 delta."""
    k = (9 * d + 4 * math.log(1.0 / delta)) / N
    return 16.0 / alpha * max(math.sqrt(k), k)


@dataclass(frozen=True)
class ComplexityPlan:
    mode: str
    alpha: float
    beta: float
    dim: int
    epsilon: float
    delta: float
    eta: float
    m: int
    n_or_N: int
    total_samples: int
    lsi_joint: float
    lsi_marginal_limit: float
    certified: bool = True
    relax: float = 1.0
    notes: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)

    def check(self):
        """Re-verify the displayed inequalities; raises if the plan is infeasible."""
        a, b, d, eps = self.alpha, self.beta, self.dim, self.epsilon
        if self.eta > eta_max(a, b, d, eps) * (1 + _CEIL_RTOL) or self.eta >= 1.0 / b:
            raise ConfigurationError("plan step size exceeds its bound")
        logterm = 9 * d + 4 * math.log(4.0 / self.delta)
        if self.mode == SINGLE:
            need = N_SINGLE_CONST / self.eta * logterm / (a**3 * eps**2) * self.relax
            if self.n_or_N < ceil_threshold(need):
                raise ConfigurationError("plan sample size below its bound")
            if self.m < _clause(4 * d / (a * self.eta * self.n_or_N), a, self.eta):
                raise ConfigurationError("plan burn-in below its bound")
            if self.total_samples != self.m + self.n_or_N:
                raise ConfigurationError("plan total is inconsistent")
        else:
            need = N_PARALLEL_CONST * logterm / (a**2 * eps**2) * self.relax
            if self.n_or_N < ceil_threshold(need):
                raise ConfigurationError("plan chain count below its bound")
            if self.m < _clause(48 * d / (a * eps), a, self.eta, scale=2.0):
                raise ConfigurationError("plan burn-in below its bound")
            if self.total_samples != self.n_or_N * (self.m + 1):
                raise ConfigurationError("plan total is inconsistent")
        return self


def _validate(alpha, beta, d, epsilon, delta, eta, relax):
    if not (alpha > 0 and beta >= alpha):
        raise ConfigurationError(f"need 0 < alpha <= beta, got alpha={alpha}, beta={beta}")
    if int(d) != d or d < 1:
        raise ConfigurationError(f"dimension must be a positive integer, got {d}")
    if not 0 < epsilon <= min(1.0, 1.0 / alpha):
        raise ConfigurationError(
            f"epsilon={epsilon} violates 0 < epsilon <= min(1, 1/alpha) = {min(1.0, 1.0 / alpha)}"
        )
    if not delta > 0:
        raise ConfigurationError(f"delta must be positive, got {delta}")
    if not 0 < relax <= 1:
        raise ConfigurationError(f"relax factor must lie in (0, 1], got {relax}")
    notes = []
    if delta > 0.5:
        msg = f"delta={delta} > 1/2: the concentration argument assumes delta <= 1/2"
        warnings.warn(msg, stacklevel=3)
        notes.append(msg)
    bound = eta_max(alpha, beta, d, epsilon)
    if eta is None:
        eta = bound
    elif not eta > 0:
        raise ConfigurationError(f"step size must be positive, got {eta}")
    elif eta > bound:
        raise ConfigurationError(
            f"eta={eta} violates eta <= alpha^3 eps^2 / (2700 beta^2 d^2) = {bound}"
        )
    if eta >= 1.0 / beta:
        raise ConfigurationError(f"eta={eta} violates eta < 1/beta = {1.0 / beta}")
    return float(eta), notes


def plan_single(alpha, beta, d, epsilon, delta, eta=None, relax=1.0, init_msd=0.0, kappa0=0.0):
    """Single-chain plan (eta, m, n).

    ``relax`` scales the certified n down for desk-scale experiments; such
    plans are marked ``certified=False`` and m is recomputed for the smaller
    n. A start away from the minimiser is handled by passing its mean squared
    distance ``init_msd`` (and LSI constant ``kappa0`` if random).
    """
    eta, notes = _validate(alpha, beta, d, epsilon, delta, eta, relax)
    logterm = 9 * d + 4 * math.log(4.0 / delta)
    n = ceil_threshold(N_SINGLE_CONST / eta * logterm / (alpha**3 * epsilon**2) * relax)
    n = max(n, 1)
    m = theorem1_burnin(alpha, eta, kappa0, init_msd, d, n)
    plan = ComplexityPlan(
        SINGLE, alpha, beta, int(d), epsilon, delta, eta, m, n, m + n,
        joint_lsi(alpha, eta), marginal_lsi(kappa0, alpha, eta, m + 1),
        certified=relax == 1.0, relax=relax, notes=notes,
    )
    return plan.check()


def plan_parallel(alpha, beta, d, epsilon, delta, eta=None, relax=1.0):
    """Embarrassingly parallel plan (eta, m, N); every chain starts at the minimiser."""
    eta, notes = _validate(alpha, beta, d, epsilon, delta, eta, relax)
    logterm = 9 * d + 4 * math.log(4.0 / delta)
    N = max(1, ceil_threshold(N_PARALLEL_CONST * logterm / (alpha**2 * epsilon**2) * relax))
    m = _clause(48 * d / (alpha * epsilon), alpha, eta, scale=2.0)
    plan = ComplexityPlan(
        PARALLEL, alpha, beta, int(d), epsilon, delta, eta, m, N, N * (m + 1),
        joint_lsi(alpha, eta), marginal_lsi(0.0, alpha, eta, m + 1),
        certified=relax == 1.0, relax=relax, notes=notes,
    )
    return plan.check()


def plan_for(potential, mode, epsilon, delta, eta=None, relax=1.0):
    """Plan for a ``PotentialSpec``; refuses potentials without asserted constants."""
    if potential.alpha is None or potential.beta is None:
        raise ConfigurationError("planning needs alpha and beta; assert them for custom potentials")
    if mode == SINGLE:
        return plan_single(potential.alpha, potential.beta, potential.dim, epsilon, delta, eta, relax)
    if mode == PARALLEL:
        return plan_parallel(potential.alpha, potential.beta, potential.dim, epsilon, delta, eta, relax)
    raise ConfigurationError(f"unknown mode {mode!r}")


def mode_ratio(alpha, beta, d, epsilon, delta):
    """Certified total_parallel / total_single for the same accuracy target."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        single = plan_single(alpha, beta, d, epsilon, delta)
        par = plan_parallel(alpha, beta, d, epsilon, delta)
    return par.total_samples / single.total_samples

