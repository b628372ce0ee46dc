"""Compiled inner loops for the ULA recursion on separable potentials.

Each kernel walks one chain through a block of pre-drawn innovations. The
arithmetic per coordinate is exactly ``x - eta * g + sqrt(2 eta) * z`` so the
kernels agree bitwise with ``sampler.ula_step`` on Gaussian targets.

Non-finite values propagate (inf turns into nan on the next step and nan is
absorbing), so finiteness is checked once per block; ``first_nonfinite``
replays a failed block to find the offending step.
"""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True, inline="always")
def _step(x, center, prec, curv, eta, sq, z, i):
    for j in range(x.shape[0]):
        u = x[j] - center[j]
        g = prec[j] * u
        if curv[j] != 0.0:
            g = g + curv[j] * np.tanh(u)
        x[j] = x[j] - eta * g + sq * z[i, j]


@njit(cache=True, nogil=True)
def _finite(x):
    for j in range(x.shape[0]):
        if not np.isfinite(x[j]):
            return False
    return True


@njit(cache=True, nogil=True)
def advance(x, center, prec, curv, eta, z, out, skip):
    """Run ``len(z)`` steps in place; rows ``i >= skip`` are copied to ``out[i - skip]``.

    Returns False if the final state is not finite.
    """
    sq = np.sqrt(2.0 * eta)
    for i in range(z.shape[0]):
        _step(x, center, prec, curv, eta, sq, z, i)
        if i >= skip:
            for j in range(x.shape[0]):
                out[i - skip, j] = x[j]
    return _finite(x)


# retained iterates are summed plainly in runs of this length, and each
# run's partial sum is folded into the compensated totals
_RUN = 256


@njit(cache=True, nogil=True, inline="always")
def _kahan(s, c, v):
    y = v - c
    t = s + y
    return t, (t - s) - y


@njit(cache=True, nogil=True)
def advance_accumulate(x, center, prec, curv, eta, z, skip, shift, s1, c1, s2, c2):
    """Like ``advance`` but folds retained iterates into running sums.

    ``s1`` accumulates (x - shift) and the upper triangle of ``s2`` its outer
    product; ``c1`` and ``c2`` carry the Kahan compensation terms.
    """
    d = x.shape[0]
    sq = np.sqrt(2.0 * eta)
    p1 = np.zeros(d)
    p2 = np.zeros((d, d))
    run = 0
    for i in range(z.shape[0]):
        _step(x, center, prec, curv, eta, sq, z, i)
        if i < skip:
            continue
        for j in range(d):
            dj = x[j] - shift[j]
            p1[j] += dj
            for k in range(j, d):
                p2[j, k] += dj * (x[k] - shift[k])
        run += 1
        if run == _RUN or i == z.shape[0] - 1:
            for j in range(d):
                s1[j], c1[j] = _kahan(s1[j], c1[j], p1[j])
                p1[j] = 0.0
                for k in range(j, d):
                    s2[j, k], c2[j, k] = _kahan(s2[j, k], c2[j, k], p2[j, k])
                    p2[j, k] = 0.0
            run = 0
    return _finite(x)


@njit(cache=True, nogil=True)
def first_nonfinite(x, center, prec, curv, eta, z):
    """Block-local index of the first non-finite iterate, or -1."""
    sq = np.sqrt(2.0 * eta)
    for i in range(z.shape[0]):
        _step(x, center, prec, curv, eta, sq, z, i)
        if not _finite(x):
            return i
    return -1
