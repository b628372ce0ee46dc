"""Command-line entry point: ``ulacov {plan,run,rate-sweep,compare,ar1}``.

Exit codes: 0 success, 2 configuration error, 3 refused by the runtime cap.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import warnings

from . import config, harness, oracles, planner
from .errors import ConfigurationError, InputError, RuntimeCapExceeded
from .potentials import PotentialSpec

EXIT_OK, EXIT_CONFIG, EXIT_REFUSED = 0, 2, 3


def _dump(obj):
    return json.dumps(obj, indent=2, allow_nan=False)


def cmd_plan(args):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        fn = planner.plan_single if args.mode == "single" else planner.plan_parallel
        plan = fn(args.alpha, args.beta, args.dim, args.eps, args.delta, eta=args.eta,
                  relax=args.relax)
    print(_dump(plan.to_dict()))
    return EXIT_OK


def _experiment_from_config(cfg, args):
    potential = PotentialSpec.from_config(cfg["potential"])
    exp = dict(cfg.get("experiment", {}))
    for key, flag in (("replications", args.replications), ("workers", args.workers),
                      ("max_grad_evals", args.max_grad_evals)):
        if flag is not None:
            exp[key] = flag
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    common = dict(
        replications=exp.get("replications", 1),
        base_seed=seed,
        workers=exp.get("workers", 1),
        max_grad_evals=exp.get("max_grad_evals", harness.DEFAULT_MAX_GRAD_EVALS),
        timing=exp.get("timing", False),
        init=tuple(cfg["init"]) if "init" in cfg else None,
        reference_n=exp.get("reference_n", 10**6),
    )
    if "plan" in cfg:
        pc = cfg["plan"]
        relax = args.relax if args.relax is not None else pc.get("relax", 1.0)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            plan = planner.plan_for(potential, cfg["mode"], pc["epsilon"], pc["delta"],
                                    eta=pc.get("eta"), relax=relax)
        return harness.ExperimentConfig.from_plan(
            potential, plan, epsilon=exp.get("epsilon", pc["epsilon"]),
            delta=exp.get("delta", pc["delta"]), **common)
    if args.relax is not None:
        raise ConfigurationError("--relax needs a config with a 'plan' section")
    ch = cfg["chain"]
    size = ch["n"] if cfg["mode"] == "single" else ch["N"]
    return harness.ExperimentConfig(
        potential, cfg["mode"], ch["eta"], ch["burn_in"], size,
        epsilon=exp.get("epsilon"), delta=exp.get("delta"), **common)


def cmd_run(args):
    cfg = config.load_run_config(args.config)
    exp = _experiment_from_config(cfg, args)
    result = harness.run_experiment(exp)
    outs = cfg.get("outputs", {})
    out_dir = config.output_dir(outs, args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / outs.get("csv", "records.csv")
    summary_path = out_dir / outs.get("summary", "summary.json")
    csv_path.write_text(result.to_csv())
    summary = dict(result.summary, outputs={"csv": str(csv_path), "summary": str(summary_path)})
    summary_path.write_text(_dump(summary))
    print(_dump(summary))
    return EXIT_OK


def _potential_and_chain(args):
    eta, burn_in = getattr(args, "eta", None), getattr(args, "burn_in", None)
    if args.config:
        cfg = config.load_run_config(args.config)
        potential = PotentialSpec.from_config(cfg["potential"])
        ch = cfg.get("chain", {})
        eta = eta if eta is not None else ch.get("eta")
        burn_in = burn_in if burn_in is not None else ch.get("burn_in")
        seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    else:
        potential = PotentialSpec.gaussian_iso(args.alpha, args.dim)
        seed = args.seed or 0
    return potential, eta, burn_in, seed


def cmd_rate_sweep(args):
    potential, eta, burn_in, seed = _potential_and_chain(args)
    if eta is None:
        raise ConfigurationError("rate-sweep needs --eta or a config with chain.eta")
    grid = [int(float(v)) for v in args.n_grid.split(",") if v.strip()]
    sweep = harness.rate_sweep(potential, eta, burn_in or 0, grid, args.replications,
                               base_seed=seed, workers=args.workers,
                               max_grad_evals=args.max_grad_evals or harness.DEFAULT_MAX_GRAD_EVALS)
    out_dir = config.output_dir(None, args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "rate_sweep.csv"
    path.write_text(sweep.to_csv())
    print(_dump(dict(sweep.to_dict(), outputs={"csv": str(path)})))
    return EXIT_OK


def cmd_compare(args):
    potential, _, _, seed = _potential_and_chain(args)
    report = harness.compare_modes(
        potential, args.eps, args.delta, args.relax, args.replications, base_seed=seed,
        workers=args.workers,
        max_grad_evals=args.max_grad_evals or harness.DEFAULT_MAX_GRAD_EVALS)
    out_dir = config.output_dir(None, args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "compare.json").write_text(_dump(report))
    print(_dump(report))
    return EXIT_OK


def ar1_rows(alpha, eta, nmax):
    if nmax > oracles.AR1_MAX_N:
        raise ConfigurationError(f"--nmax {nmax} exceeds the dense limit {oracles.AR1_MAX_N}")
    if nmax < 1:
        raise ConfigurationError("--nmax must be >= 1")
    sizes, n = [], 1
    while n <= nmax:
        sizes.append(n)
        n *= 2
    if sizes[-1] != nmax:
        sizes.append(nmax)
    limit = planner.joint_lsi(alpha, eta)
    return [(k, oracles.ar1_top_eigenvalue(oracles.AR1Spec.from_ula(alpha, eta, k)), limit)
            for k in sizes]


def cmd_ar1(args):
    if not 0 < args.alpha * args.eta < 1:
        raise ConfigurationError("need 0 < alpha * eta < 1")
    rows = ar1_rows(args.alpha, args.eta, args.nmax)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["n", "lambda_max", "limit"])
    for n, lam, lim in rows:
        w.writerow([n, repr(lam), repr(lim)])
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="ulacov", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("plan", help="print the prescribed (eta, m, n) or (eta, m, N) as JSON")
    sp.add_argument("--mode", choices=["single", "parallel"], required=True)
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--beta", type=float, required=True)
    sp.add_argument("--dim", type=int, required=True)
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--delta", type=float, required=True)
    sp.add_argument("--eta", type=float)
    sp.add_argument("--relax", type=float, default=1.0)
    sp.set_defaults(func=cmd_plan)

    def run_flags(sp):
        sp.add_argument("--replications", "-R", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--workers", type=int)
        sp.add_argument("--max-grad-evals", type=float)
        sp.add_argument("--out-dir")

    sp = sub.add_parser("run", help="run a Monte Carlo experiment from a JSON config")
    sp.add_argument("--config", required=True)
    sp.add_argument("--relax", type=float)
    run_flags(sp)
    sp.set_defaults(func=cmd_run)

    def potential_flags(sp):
        sp.add_argument("--config")
        sp.add_argument("--alpha", type=float, default=1.0)
        sp.add_argument("--dim", type=int, default=1)

    sp = sub.add_parser("rate-sweep", help="fit the log-log decay of the sampling error in n")
    potential_flags(sp)
    sp.add_argument("--eta", type=float)
    sp.add_argument("--burn-in", type=int)
    sp.add_argument("--n-grid", required=True, help="comma-separated sample sizes")
    run_flags(sp)
    sp.set_defaults(func=cmd_rate_sweep, replications=50, workers=1)

    sp = sub.add_parser("compare", help="single-chain vs parallel ULA at scaled plans")
    potential_flags(sp)
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--delta", type=float, required=True)
    sp.add_argument("--relax", type=float, default=1.0)
    run_flags(sp)
    sp.set_defaults(func=cmd_compare, replications=20, workers=1)

    sp = sub.add_parser("ar1", help="top eigenvalue of the AR(1) autocovariance as n doubles")
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--eta", type=float, required=True)
    sp.add_argument("--nmax", type=int, required=True)
    sp.set_defaults(func=cmd_ar1)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RuntimeCapExceeded as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_REFUSED


if __name__ == "__main__":
    sys.exit(main())
