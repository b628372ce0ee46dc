"""Strongly convex, smooth potentials f with pi proportional to exp(-f).

Every shipped potential has a separable gradient of the form

    grad_j(x) = prec_j * (x_j - c_j) + curv_j * tanh(x_j - c_j)

which covers isotropic and diagonal Gaussians (``curv = 0``) and the
log-cosh regularised potential (``prec = a``, ``curv = b - a``, ``c = 0``).
That shared form is what the compiled sampling kernel consumes.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError, InputError


class Kind(enum.Enum):
    GAUSSIAN_ISO = "gaussian_iso"
    GAUSSIAN_DIAG = "gaussian_diag"
    LOGCOSH = "logcosh"
    CUSTOM = "custom"


@dataclass(frozen=True, eq=False)
class PotentialSpec:
    """A target distribution together with its convexity constants.

    Use the ``gaussian_iso``, ``gaussian_diag``, ``logcosh`` and ``custom``
    constructors rather than building one directly.
    """

    kind: Kind
    dim: int
    alpha: Optional[float]
    beta: Optional[float]
    minimizer: np.ndarray
    prec: Optional[np.ndarray] = None
    curv: Optional[np.ndarray] = None
    params: dict = field(default_factory=dict)
    grad_fn: Optional[Callable] = None
    value_fn: Optional[Callable] = None

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigurationError("dim must be >= 1")
        if self.alpha is not None and self.beta is not None:
            if not 0 < self.alpha <= self.beta:
                raise ConfigurationError(
                    f"need 0 < alpha <= beta, got alpha={self.alpha}, beta={self.beta}"
                )
        self.minimizer.setflags(write=False)
        for arr in (self.prec, self.curv):
            if arr is not None:
                arr.setflags(write=False)
        g = self.gradient(self.minimizer)
        if np.linalg.norm(g) > 1e-12:
            raise ConfigurationError(
                f"gradient at the stated minimizer has norm {np.linalg.norm(g):.3e}"
            )

    # -- constructors ------------------------------------------------------

    @classmethod
    def gaussian_iso(cls, alpha, dim, minimizer=None):
        alpha = float(alpha)
        if alpha <= 0:
            raise ConfigurationError("alpha must be positive")
        xstar = _vector(minimizer, dim)
        return cls(
            Kind.GAUSSIAN_ISO, dim, alpha, alpha, xstar,
            prec=np.full(dim, alpha), curv=np.zeros(dim),
            params={"alpha": alpha, "dim": dim},
        )

    @classmethod
    def gaussian_diag(cls, precision, minimizer=None):
        lam = np.asarray(precision, dtype=float).ravel()
        if lam.size == 0 or np.any(lam <= 0) or not np.all(np.isfinite(lam)):
            raise ConfigurationError("precision entries must be positive and finite")
        xstar = _vector(minimizer, lam.size)
        return cls(
            Kind.GAUSSIAN_DIAG, lam.size, float(lam.min()), float(lam.max()), xstar,
            prec=lam.copy(), curv=np.zeros(lam.size),
            params={"precision": lam.tolist()},
        )

    @classmethod
    def logcosh(cls, a, b, dim):
        """f(x) = (a/2)|x|^2 + (b - a) sum_j log cosh(x_j), minimised at 0."""
        a, b = float(a), float(b)
        if not 0 < a <= b:
            raise ConfigurationError(f"need 0 < a <= b, got a={a}, b={b}")
        return cls(
            Kind.LOGCOSH, dim, a, b, np.zeros(dim),
            prec=np.full(dim, a), curv=np.full(dim, b - a),
            params={"a": a, "b": b, "dim": dim},
        )

    @classmethod
    def custom(cls, grad_fn, dim, minimizer, value_fn=None, alpha=None, beta=None):
        """Black-box gradient oracle.

        The planner refuses these unless the caller asserts ``alpha`` and
        ``beta``; nothing here verifies them.
        """
        return cls(
            Kind.CUSTOM, dim,
            None if alpha is None else float(alpha),
            None if beta is None else float(beta),
            _vector(minimizer, dim), grad_fn=grad_fn, value_fn=value_fn,
        )

    @classmethod
    def from_config(cls, cfg):
        cfg = dict(cfg)
        kind = cfg.pop("kind")
        try:
            if kind == "gaussian_iso":
                return cls.gaussian_iso(cfg["alpha"], cfg["dim"], cfg.get("minimizer"))
            if kind == "gaussian_diag":
                return cls.gaussian_diag(cfg["precision"], cfg.get("minimizer"))
            if kind == "logcosh":
                return cls.logcosh(cfg["a"], cfg["b"], cfg["dim"])
        except KeyError as exc:
            raise ConfigurationError(f"potential '{kind}' is missing {exc}") from None
        raise ConfigurationError(f"unknown potential kind {kind!r}")

    def to_config(self):
        if self.kind is Kind.CUSTOM:
            raise ConfigurationError("custom potentials cannot be serialised")
        out = {"kind": self.kind.value, **self.params}
        if self.kind is not Kind.LOGCOSH and np.any(self.minimizer != 0):
            out["minimizer"] = self.minimizer.tolist()
        return out

    # -- oracles -----------------------------------------------------------

    @property
    def is_gaussian(self):
        return self.kind in (Kind.GAUSSIAN_ISO, Kind.GAUSSIAN_DIAG)

    @property
    def separable(self):
        """True if the compiled kernel can evaluate this gradient."""
        return self.kind is not Kind.CUSTOM

    def _check(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1:] != (self.dim,):
            raise InputError(f"expected trailing dimension {self.dim}, got shape {x.shape}")
        return x

    def gradient(self, x):
        x = self._check(x)
        if self.kind is Kind.CUSTOM:
            return np.asarray(self.grad_fn(x), dtype=float)
        u = x - self.minimizer
        return self.prec * u + self.curv * np.tanh(u)

    def value(self, x):
        """Potential value, up to an additive constant."""
        x = self._check(x)
        if self.kind is Kind.CUSTOM:
            if self.value_fn is None:
                raise InputError("custom potential has no value oracle")
            return self.value_fn(x)
        u = x - self.minimizer
        # log cosh(u) = logaddexp(u, -u) - log 2, stable for large |u|
        logcosh = np.logaddexp(u, -u) - np.log(2.0)
        return np.sum(0.5 * self.prec * u**2 + self.curv * logcosh, axis=-1)

    def precision(self):
        """Diagonal precision matrix of a Gaussian target."""
        if not self.is_gaussian:
            return None
        return np.diag(self.prec)

    def true_covariance(self):
        """Cov(pi) for Gaussian kinds; None when no closed form exists."""
        if not self.is_gaussian:
            return None
        return np.diag(1.0 / self.prec)

    def describe(self):
        if self.kind is Kind.CUSTOM:
            return f"custom(d={self.dim})"
        args = ",".join(f"{k}={v}" for k, v in self.params.items())
        return f"{self.kind.value}({args})"


def _vector(v, dim):
    if v is None:
        return np.zeros(int(dim))
    v = np.asarray(v, dtype=float).ravel().copy()
    if v.size != dim:
        raise ConfigurationError(f"minimizer has length {v.size}, expected {dim}")
    return v
