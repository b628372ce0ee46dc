"""Single-chain and embarrassingly parallel ULA with reproducible streams.

Randomness is keyed by ``(seed, replication, chain)``: each key seeds its
own Philox counter-based generator, and the step index is the position in
that generator's stream. Chain ``k`` therefore sees the same innovations
however chains are scheduled over workers.
"""

from __future__ import annotations

import json
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import _kernels
from .errors import ConfigurationError, InputError, NumericalError
from .estimators import MomentAccumulator

MAGIC = b"ULAB"
_HEADER = struct.Struct("<4sQI")  # magic, rows, cols: 16 bytes
_CHUNK_ELEMS = 1 << 18


@dataclass(frozen=True)
class ChainParams:
    """ULA run configuration.

    ``n`` is the number of retained iterates for a single chain and the
    number of chains for the parallel sampler.
    """

    eta: float
    burn_in: int = 0
    n: int = 1
    seed: int = 0
    init: Optional[tuple] = None

    def __post_init__(self):
        if not self.eta > 0:
            raise ConfigurationError(f"step size must be positive, got {self.eta}")
        if self.burn_in < 0:
            raise ConfigurationError("burn_in must be >= 0")
        if self.n < 1:
            raise ConfigurationError("n must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError("seed must be a 64-bit unsigned integer")
        if self.init is not None:
            object.__setattr__(self, "init", tuple(float(v) for v in np.ravel(self.init)))

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class SampleBlock:
    """Retained iterates: row ``i`` is X_{m+1+i} (single) or X_{m+1}^k (parallel)."""

    data: np.ndarray
    params: ChainParams
    potential: str
    mode: str
    replication: int = 0

    def __post_init__(self):
        self.data.setflags(write=False)

    def __len__(self):
        return self.data.shape[0]

    def save(self, path):
        """Write a raw row-major float64 matrix plus a JSON sidecar (``path + .json``)."""
        path = Path(path)
        rows, cols = self.data.shape
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(MAGIC, rows, cols))
            fh.write(np.ascontiguousarray(self.data, dtype="<f8").tobytes())
        meta = {
            "params": self.params.to_dict(),
            "potential": self.potential,
            "mode": self.mode,
            "replication": self.replication,
        }
        Path(str(path) + ".json").write_text(json.dumps(meta, indent=2))

    @classmethod
    def load(cls, path):
        path = Path(path)
        raw = path.read_bytes()
        magic, rows, cols = _HEADER.unpack_from(raw)
        if magic != MAGIC:
            raise InputError(f"{path} is not a sample block file")
        data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(rows, cols).copy()
        meta = json.loads(Path(str(path) + ".json").read_text())
        params = ChainParams(**meta["params"])
        return cls(data, params, meta["potential"], meta["mode"], meta["replication"])


def chain_rng(seed, replication=0, chain=0):
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(replication), int(chain)))
    return np.random.Generator(np.random.Philox(ss))


def check_step_size(potential, eta):
    if not eta > 0:
        raise ConfigurationError(f"step size must be positive, got {eta}")
    if potential.beta is not None and eta >= 1.0 / potential.beta:
        raise ConfigurationError(
            f"step size {eta} violates eta < 1/beta = {1.0 / potential.beta}"
        )


def ula_step(potential, x, eta, z):
    """One ULA update x - eta * grad f(x) + sqrt(2 eta) * z."""
    x = np.asarray(x, dtype=float)
    out = x - eta * potential.gradient(x) + np.sqrt(2.0 * eta) * np.asarray(z, dtype=float)
    if not np.all(np.isfinite(out)):
        raise NumericalError("ULA step produced a non-finite iterate")
    return out


def _initial(potential, params):
    if params.init is None:
        return potential.minimizer.astype(float).copy()
    x0 = np.array(params.init, dtype=float)
    if x0.size != potential.dim:
        raise ConfigurationError(f"init has length {x0.size}, expected {potential.dim}")
    return x0


def _chunk_rows(dim):
    return max(1, _CHUNK_ELEMS // dim)


def _noise_blocks(total, dim, rng=None, noise=None):
    """Yield innovation blocks covering ``total`` steps."""
    if noise is not None:
        noise = np.asarray(noise, dtype=float).reshape(-1, dim)
        if noise.shape[0] < total:
            raise InputError(f"injected noise has {noise.shape[0]} steps, need {total}")
        noise = noise[:total]
    step = _chunk_rows(dim)
    # one buffer reused across blocks; callers consume each block before the next
    buf = None if noise is not None else np.empty((min(step, total), dim))
    for start in range(0, total, step):
        stop = min(total, start + step)
        if noise is not None:
            yield np.ascontiguousarray(noise[start:stop])
        else:
            yield rng.standard_normal(out=buf[: stop - start])


def _advance_python(potential, x, eta, z, out, skip):
    for i in range(z.shape[0]):
        x[:] = x - eta * potential.gradient(x) + np.sqrt(2.0 * eta) * z[i]
        if not np.all(np.isfinite(x)):
            return i
        if i >= skip:
            out[i - skip] = x
    return -1


def _blowup(potential, x_before, eta, z, offset):
    bad = _kernels.first_nonfinite(x_before, potential.minimizer, potential.prec,
                                   potential.curv, float(eta), z)
    step = offset + bad + 1
    return NumericalError(f"non-finite iterate at step {step}", step)


def _advance(potential, x, eta, z, out, skip, offset):
    """Advance ``x`` through block ``z``; ``offset`` is the steps already taken."""
    if not potential.separable:
        bad = _advance_python(potential, x, eta, z, out, skip)
        if bad >= 0:
            raise NumericalError(f"non-finite iterate at step {offset + bad + 1}", offset + bad + 1)
        return
    before = x.copy()
    if not _kernels.advance(x, potential.minimizer, potential.prec, potential.curv,
                            float(eta), z, out, skip):
        raise _blowup(potential, before, eta, z, offset)


def iter_single(potential, params, replication=0, noise=None):
    """Stream the retained iterates of one chain in blocks of rows.

    Burn-in iterates are computed and discarded without being stored.
    ``noise``, if given, replaces the random innovations (shape (m+n, d)).
    """
    check_step_size(potential, params.eta)
    d = potential.dim
    x = _initial(potential, params)
    m, total = params.burn_in, params.burn_in + params.n
    rng = None if noise is not None else chain_rng(params.seed, replication, 0)
    done = 0
    for z in _noise_blocks(total, d, rng, noise):
        skip = max(0, m - done)
        out = np.empty((max(0, z.shape[0] - skip), d))
        _advance(potential, x, params.eta, z, out, skip, done)
        done += z.shape[0]
        if out.shape[0]:
            yield out


def run_single(potential, params, replication=0, noise=None):
    """Rows X_{m+1}, ..., X_{m+n} of a single chain started at ``params.init``."""
    rows = list(iter_single(potential, params, replication, noise))
    data = np.concatenate(rows, axis=0)
    return SampleBlock(data, params, potential.describe(), "single", replication)


def single_moments(potential, params, replication=0, noise=None):
    """Sample moments of one chain without materialising its iterates.

    Retained iterates are folded into Kahan-compensated sums shifted by the
    minimiser, then merged into a ``MomentAccumulator`` block by block.
    """
    if not potential.separable:
        acc = MomentAccumulator(potential.dim)
        for rows in iter_single(potential, params, replication, noise):
            acc.update(rows)
        return acc.summary()

    check_step_size(potential, params.eta)
    d = potential.dim
    x = _initial(potential, params)
    shift = potential.minimizer
    m, total = params.burn_in, params.burn_in + params.n
    rng = None if noise is not None else chain_rng(params.seed, replication, 0)
    acc = MomentAccumulator(d)
    done = 0
    for z in _noise_blocks(total, d, rng, noise):
        skip = max(0, m - done)
        s1, c1 = np.zeros(d), np.zeros(d)
        s2, c2 = np.zeros((d, d)), np.zeros((d, d))
        before = x.copy()
        if not _kernels.advance_accumulate(x, potential.minimizer, potential.prec, potential.curv,
                                           float(params.eta), z, skip, shift, s1, c1, s2, c2):
            raise _blowup(potential, before, params.eta, z, done)
        kept = max(0, z.shape[0] - skip)
        s2 = np.triu(s2) + np.triu(s2, 1).T
        acc.add_shifted_sums(kept, shift, s1, s2)
        done += z.shape[0]
    return acc.summary()


def _last_iterate(potential, params, x, rng, noise):
    steps = params.burn_in + 1
    dummy = np.empty((0, potential.dim))
    done = 0
    for z in _noise_blocks(steps, potential.dim, rng, noise):
        _advance(potential, x, params.eta, z, dummy, z.shape[0], done)
        done += z.shape[0]
    return x


def run_parallel(potential, params, replication=0, workers=1, noise=None):
    """Last iterates X_{m+1}^k of ``params.n`` independent chains.

    Chains are split into contiguous ranges over ``workers`` threads; row
    ``k`` always comes from stream ``(seed, replication, k)``, so the result
    does not depend on ``workers``. ``noise`` may inject innovations of
    shape (N, m+1, d).
    """
    check_step_size(potential, params.eta)
    N, d = params.n, potential.dim
    x0 = _initial(potential, params)
    if noise is not None:
        noise = np.asarray(noise, dtype=float).reshape(N, params.burn_in + 1, d)
    out = np.empty((N, d))

    def work(lo, hi):
        for k in range(lo, hi):
            rng = None if noise is not None else chain_rng(params.seed, replication, k)
            out[k] = _last_iterate(potential, params, x0.copy(), rng,
                                   None if noise is None else noise[k])

    workers = max(1, min(int(workers), N))
    bounds = np.linspace(0, N, workers + 1).astype(int)
    if workers == 1:
        work(0, N)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(work, lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:])]
            for f in futures:
                f.result()
    return SampleBlock(out, params, potential.describe(), "parallel", replication)
