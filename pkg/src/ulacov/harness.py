"""Monte Carlo experiments on the bias-variance split of the covariance error.

Each replication r draws its chains from streams keyed by
``(base_seed, r, chain)``. E[Sigma_hat] is not observable, so it is
approximated by the average of Sigma_hat over replications (the pooled
mean); the discretisation and non-stationarity terms are measured against
the analytic Cov(pi) and Cov(pi_eta) of Gaussian targets.
"""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import oracles, planner
from .errors import ConfigurationError, InputError, RuntimeCapExceeded
from .estimators import operator_norm, sample_moments
from .potentials import PotentialSpec
from .sampler import ChainParams, check_step_size, run_parallel, single_moments

DEFAULT_MAX_GRAD_EVALS = 1e9
TRIANGLE_SLACK = 1e-9
CSV_HEADER = ["rep", "err_total", "err_disc", "err_nonstat", "err_var", "wall_ms"]
QUANTILES = (0.05, 0.25, 0.5, 0.75, 0.95)
# replication index reserved for the long reference run of non-Gaussian targets
REFERENCE_STREAM = 2**63


@dataclass
class ExperimentConfig:
    potential: PotentialSpec
    mode: str
    eta: float
    burn_in: int
    size: int
    replications: int = 1
    base_seed: int = 0
    workers: int = 1
    epsilon: Optional[float] = None
    delta: Optional[float] = None
    plan: Optional[planner.ComplexityPlan] = None
    max_grad_evals: float = DEFAULT_MAX_GRAD_EVALS
    timing: bool = False
    init: Optional[tuple] = None
    reference_n: int = 10**6

    def __post_init__(self):
        if self.mode not in (planner.SINGLE, planner.PARALLEL):
            raise ConfigurationError(f"unknown mode {self.mode!r}")
        if self.replications < 1:
            raise ConfigurationError("replications must be >= 1")
        check_step_size(self.potential, self.eta)
        self.chain_params()

    @classmethod
    def from_plan(cls, potential, plan, **kwargs):
        kwargs.setdefault("epsilon", plan.epsilon)
        kwargs.setdefault("delta", plan.delta)
        return cls(potential, plan.mode, plan.eta, plan.m, plan.n_or_N, plan=plan, **kwargs)

    def chain_params(self):
        return ChainParams(self.eta, self.burn_in, self.size, self.base_seed, self.init)

    def grad_evals(self):
        if self.mode == planner.SINGLE:
            per_rep = self.burn_in + self.size
        else:
            per_rep = self.size * (self.burn_in + 1)
        total = self.replications * per_rep
        if not self.potential.is_gaussian:
            eta_ref, m_ref = self._reference_steps()
            total += m_ref + max(self.reference_n, 1)
        return total

    def _reference_steps(self):
        eta_ref = self.eta / 4.0
        return eta_ref, int(math.ceil(10.0 / (self.potential.alpha * eta_ref)))


@dataclass
class ExperimentRecord:
    rep: int
    err_total: float
    err_disc: Optional[float]
    err_nonstat: Optional[float]
    err_var: float
    wall_ms: Optional[float] = None

    def triangle_holds(self, slack=TRIANGLE_SLACK):
        if self.err_disc is None or self.err_nonstat is None:
            return None
        return self.err_total <= self.err_disc + self.err_nonstat + self.err_var + slack


@dataclass
class ExperimentResult:
    records: list
    summary: dict
    covariances: list = field(repr=False, default_factory=list)

    def to_csv(self):
        return records_to_csv(self.records)


def _fmt(v):
    return "" if v is None else repr(float(v))


def records_to_csv(records):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow([r.rep, _fmt(r.err_total), _fmt(r.err_disc), _fmt(r.err_nonstat),
                    _fmt(r.err_var), _fmt(r.wall_ms)])
    return buf.getvalue()


def _quantiles(values):
    v = np.asarray([x for x in values if x is not None], dtype=float)
    if v.size == 0:
        return None
    return {f"q{int(round(q * 100)):02d}": float(np.quantile(v, q)) for q in QUANTILES}


def reference_covariance(potential, eta, n, seed):
    """Long single-chain estimate of Cov(pi) at a quarter of the step size."""
    eta_ref = eta / 4.0
    m_ref = int(math.ceil(10.0 / (potential.alpha * eta_ref)))
    params = ChainParams(eta_ref, m_ref, max(int(n), 1), seed)
    return single_moments(potential, params, replication=REFERENCE_STREAM).covariance


def _one_replication(cfg, rep):
    t0 = time.perf_counter()
    params = cfg.chain_params()
    if cfg.mode == planner.SINGLE:
        cov = single_moments(cfg.potential, params, replication=rep).covariance
    else:
        cov = sample_moments(run_parallel(cfg.potential, params, replication=rep)).covariance
    return cov, 1000.0 * (time.perf_counter() - t0)


def run_experiment(cfg: ExperimentConfig):
    """Run ``cfg.replications`` independent estimates and split their errors.

    Raises ``RuntimeCapExceeded`` before doing any work if the run would
    need more than ``cfg.max_grad_evals`` gradient evaluations.
    """
    estimate = cfg.grad_evals()
    if estimate > cfg.max_grad_evals:
        raise RuntimeCapExceeded(estimate, cfg.max_grad_evals)

    t_start = time.perf_counter()
    reps = range(cfg.replications)
    if cfg.workers > 1 and cfg.replications > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(lambda r: _one_replication(cfg, r), reps))
    else:
        results = [_one_replication(cfg, r) for r in reps]
    covs = [c for c, _ in results]
    pooled = np.mean(np.stack(covs), axis=0)

    p = cfg.potential
    target = p.true_covariance()
    stationary = oracles.gaussian_ula_stationary_cov(p, cfg.eta)
    if target is None:
        target = reference_covariance(p, cfg.eta, cfg.reference_n, cfg.base_seed)
    err_disc = None if stationary is None else operator_norm(stationary - p.true_covariance())
    err_nonstat = None if stationary is None else operator_norm(pooled - stationary)

    records = []
    for rep, (cov, ms) in enumerate(results):
        records.append(ExperimentRecord(
            rep,
            operator_norm(cov - target),
            err_disc,
            err_nonstat,
            operator_norm(cov - pooled),
            ms if cfg.timing else None,
        ))
    summary = summarize(cfg, records, estimate)
    if cfg.timing:
        summary["wall_ms_total"] = 1000.0 * (time.perf_counter() - t_start)
    return ExperimentResult(records, summary, covs)


def _rate_scale(cfg, delta):
    p = cfg.potential
    k = 9 * p.dim + 4 * math.log(1.0 / delta)
    if cfg.mode == planner.SINGLE:
        return math.sqrt(k / (p.alpha * cfg.eta * cfg.size)) / p.alpha
    return math.sqrt(k / cfg.size) / p.alpha


def summarize(cfg, records, grad_evals):
    totals = [r.err_total for r in records]
    tri = [r.triangle_holds() for r in records]
    out = {
        "mode": cfg.mode,
        "potential": cfg.potential.describe(),
        "eta": cfg.eta,
        "burn_in": cfg.burn_in,
        "size": cfg.size,
        "replications": cfg.replications,
        "base_seed": cfg.base_seed,
        "grad_evals": int(grad_evals),
        "certified": None if cfg.plan is None else cfg.plan.certified,
        "relax": None if cfg.plan is None else cfg.plan.relax,
        "epsilon": cfg.epsilon,
        "coverage": None,
        "err_disc": records[0].err_disc,
        "err_nonstat": records[0].err_nonstat,
        "triangle_ok": None if tri[0] is None else all(tri),
        "quantiles": {
            "err_total": _quantiles(totals),
            "err_var": _quantiles(r.err_var for r in records),
        },
        "concentration": None,
    }
    if cfg.epsilon is not None:
        out["coverage"] = sum(t <= cfg.epsilon for t in totals) / len(totals)
    if cfg.potential.alpha is not None:
        delta = cfg.delta if cfg.delta is not None and 0 < cfg.delta < 0.25 else 0.05
        level = 1.0 - 4.0 * delta
        q = float(np.quantile([r.err_var for r in records], level))
        scale = _rate_scale(cfg, delta)
        conc = {"delta": delta, "level": level, "empirical_quantile": q,
                "rate_scale": scale, "empirical_constant": q / scale}
        p = cfg.potential
        if cfg.mode == planner.SINGLE:
            conc["bound_statement"] = planner.concentration_bound(p.alpha, cfg.eta, p.dim, cfg.size, delta)
            conc["bound_proof"] = planner.concentration_bound(p.alpha, cfg.eta, p.dim, cfg.size, delta, "proof")
        else:
            conc["bound_parallel"] = planner.parallel_concentration_bound(p.alpha, p.dim, cfg.size, delta)
        out["concentration"] = conc
    return out


@dataclass
class RateSweep:
    table: list
    slope: float
    intercept: float

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "median_err", "q25_err", "q75_err"])
        for row in self.table:
            w.writerow([row["n"], repr(row["median_err"]), repr(row["q25_err"]), repr(row["q75_err"])])
        return buf.getvalue()

    def to_dict(self):
        return {"slope": self.slope, "intercept": self.intercept, "table": self.table}


def rate_sweep(potential, eta, m, n_grid, replications, base_seed=0, workers=1,
               max_grad_evals=DEFAULT_MAX_GRAD_EVALS):
    """Median ||Sigma_hat - pooled mean|| against n, and its log-log slope."""
    n_grid = sorted(int(n) for n in n_grid)
    if len(n_grid) < 4:
        raise InputError(f"rate sweep needs at least 4 grid points, got {len(n_grid)}")
    needed = replications * sum(m + n for n in n_grid)
    if needed > max_grad_evals:
        raise RuntimeCapExceeded(needed, max_grad_evals)
    table = []
    for n in n_grid:
        cfg = ExperimentConfig(potential, planner.SINGLE, eta, m, n, replications=replications,
                               base_seed=base_seed, workers=workers, max_grad_evals=math.inf)
        res = run_experiment(cfg)
        errs = np.array([r.err_var for r in res.records])
        table.append({"n": n, "median_err": float(np.median(errs)),
                      "q25_err": float(np.quantile(errs, 0.25)),
                      "q75_err": float(np.quantile(errs, 0.75))})
    x = np.log([row["n"] for row in table])
    y = np.log([row["median_err"] for row in table])
    slope, intercept = np.polyfit(x, y, 1)
    return RateSweep(table, float(slope), float(intercept))


def compare_modes(potential, epsilon, delta, gamma, replications, base_seed=0, workers=1,
                  max_grad_evals=DEFAULT_MAX_GRAD_EVALS):
    """Run single-chain and parallel ULA at gamma-scaled plans for the same target."""
    if not 0 < gamma <= 1:
        raise ConfigurationError(f"gamma must lie in (0, 1], got {gamma}")
    plans = {mode: planner.plan_for(potential, mode, epsilon, delta, relax=gamma)
             for mode in (planner.SINGLE, planner.PARALLEL)}
    cfgs = {mode: ExperimentConfig.from_plan(potential, plan, replications=replications,
                                             base_seed=base_seed, workers=workers,
                                             max_grad_evals=max_grad_evals)
            for mode, plan in plans.items()}
    total = sum(c.grad_evals() for c in cfgs.values())
    if total > max_grad_evals:
        raise RuntimeCapExceeded(total, max_grad_evals)
    report = {"epsilon": epsilon, "delta": delta, "gamma": gamma, "replications": replications}
    for mode, cfg in cfgs.items():
        res = run_experiment(cfg)
        report[mode] = {
            "plan": plans[mode].to_dict(),
            "grad_evals": cfg.grad_evals(),
            "coverage": res.summary["coverage"],
            "median_err_total": res.summary["quantiles"]["err_total"]["q50"],
            "median_err_var": res.summary["quantiles"]["err_var"]["q50"],
        }
    report["planner_ratio"] = planner.mode_ratio(potential.alpha, potential.beta, potential.dim,
                                                 epsilon, delta)
    report["relaxed_ratio"] = (plans[planner.PARALLEL].total_samples
                               / plans[planner.SINGLE].total_samples)
    return report
