"""Sample moments with the 1/n convention, and symmetric-matrix norms."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import InputError, NumericalError

EIGH_MAX_DIM = 64


def symmetrize(a):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InputError(f"expected a square matrix, got shape {a.shape}")
    return 0.5 * (a + a.T)


@dataclass(frozen=True)
class MomentSummary:
    """Mean, second moment and covariance of a block of rows.

    ``covariance = second_moment - outer(mean, mean)``, normalised by 1/n.
    """

    count: int
    mean: np.ndarray
    second_moment: np.ndarray
    covariance: np.ndarray

    @property
    def dim(self):
        return self.mean.size

    def to_json(self):
        iu = np.triu_indices(self.dim)
        return json.dumps({
            "count": self.count,
            "dim": self.dim,
            "mean": self.mean.tolist(),
            "covariance_upper": self.covariance[iu].tolist(),
        })

    @classmethod
    def from_json(cls, text):
        obj = json.loads(text)
        d = obj["dim"]
        cov = np.zeros((d, d))
        cov[np.triu_indices(d)] = obj["covariance_upper"]
        cov = cov + np.triu(cov, 1).T
        mean = np.asarray(obj["mean"], dtype=float)
        return cls(obj["count"], mean, cov + np.outer(mean, mean), cov)


class MomentAccumulator:
    """Mergeable streaming accumulator of (count, mean, centred scatter).

    Blocks are folded in with the pairwise update of Chan, Golub and LeVeque,
    so merging partial accumulators in a fixed order is deterministic and
    avoids the cancellation of the raw-moment formula.
    """

    def __init__(self, dim):
        self.dim = int(dim)
        self.count = 0
        self.mean = np.zeros(self.dim)
        self.scatter = np.zeros((self.dim, self.dim))

    def _merge(self, count, mean, scatter):
        if count == 0:
            return self
        if self.count == 0:
            self.count, self.mean, self.scatter = count, mean.copy(), scatter.copy()
            return self
        total = self.count + count
        delta = mean - self.mean
        self.mean = self.mean + delta * (count / total)
        self.scatter = self.scatter + scatter + np.outer(delta, delta) * (self.count * count / total)
        self.count = total
        return self

    def update(self, rows):
        rows = np.asarray(rows, dtype=float)
        if rows.ndim == 1:
            rows = rows[None, :]
        if rows.shape[1] != self.dim:
            raise InputError(f"rows have {rows.shape[1]} columns, expected {self.dim}")
        if rows.shape[0] == 0:
            return self
        mean = rows.mean(axis=0)
        centred = rows - mean
        return self._merge(rows.shape[0], mean, centred.T @ centred)

    def add_shifted_sums(self, count, shift, s1, s2):
        """Fold in sums of (x - shift) and of its outer product over ``count`` rows."""
        if count == 0:
            return self
        mean_off = s1 / count
        scatter = s2 - np.outer(s1, s1) / count
        return self._merge(count, shift + mean_off, symmetrize(scatter))

    def merge(self, other):
        return self._merge(other.count, other.mean, other.scatter)

    def summary(self):
        if self.count == 0:
            raise InputError("no rows accumulated")
        cov = symmetrize(self.scatter / self.count)
        return MomentSummary(self.count, self.mean.copy(), cov + np.outer(self.mean, self.mean), cov)


def sample_moments(block):
    """Mean and 1/n sample covariance of the rows of ``block``.

    ``block`` may be a ``SampleBlock`` or an (n, d) array. Serves both the
    single-chain estimator and the parallel last-iterate estimator.
    """
    rows = _rows(block)
    if rows.shape[0] == 0:
        raise InputError("cannot take moments of an empty block")
    return MomentAccumulator(rows.shape[1]).update(rows).summary()


def centered_decomposition_terms(block, reference_mean):
    """Split the sample covariance around a fixed reference mean.

    Returns ``(S, M)`` with ``S = (1/n) sum (x_i - r)(x_i - r)^T`` and
    ``M = (xbar - r)(xbar - r)^T``; the covariance equals ``S - M``.
    """
    rows = _rows(block)
    r = np.asarray(reference_mean, dtype=float).ravel()
    if r.size != rows.shape[1]:
        raise InputError(f"reference mean has length {r.size}, rows have {rows.shape[1]} columns")
    if rows.shape[0] == 0:
        raise InputError("empty block")
    c = rows - r
    second = symmetrize(c.T @ c / rows.shape[0])
    m = c.mean(axis=0)
    return second, np.outer(m, m)


def operator_norm(a, tol=1e-12, max_iter=100_000):
    """Largest absolute eigenvalue of a symmetric matrix.

    Dense ``eigvalsh`` up to 64 dimensions, shifted power iteration above.
    """
    a = symmetrize(a)
    if not np.all(np.isfinite(a)):
        raise NumericalError("matrix has non-finite entries")
    if a.shape[0] == 0:
        return 0.0
    if a.shape[0] <= EIGH_MAX_DIM:
        w = np.linalg.eigvalsh(a)
        return float(max(abs(w[0]), abs(w[-1])))
    top, bottom = extreme_eigenvalues(a, tol=tol, max_iter=max_iter)
    return float(max(abs(top), abs(bottom)))


def extreme_eigenvalues(a, tol=1e-12, max_iter=100_000):
    """(lambda_max, lambda_min) of symmetric ``a`` by shifted power iteration.

    Gershgorin gives a shift ``s`` with ``s*I - A`` and ``A + s*I`` both PSD,
    so each shifted matrix's dominant eigenvalue is the wanted extreme one.
    """
    a = symmetrize(a)
    s = float(np.max(np.sum(np.abs(a), axis=1)))
    if s == 0.0:
        return 0.0, 0.0
    eye = np.eye(a.shape[0])
    top = _power(a + s * eye, tol, max_iter) - s
    bottom = s - _power(s * eye - a, tol, max_iter)
    return top, bottom


def _power(b, tol, max_iter):
    # deterministic start with a component along every coordinate
    v = 1.0 + np.arange(b.shape[0]) / b.shape[0]
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = b @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        new = float(v @ w)
        v = w / nw
        if abs(new - lam) <= tol * max(abs(new), 1e-300):
            return new
        lam = new
    return lam


def _rows(block):
    data = getattr(block, "data", block)
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    if data.ndim != 2:
        raise InputError(f"expected an (n, d) block, got shape {data.shape}")
    return data
