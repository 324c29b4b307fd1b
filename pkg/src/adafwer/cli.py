"""Command line interface: fit, reject, simulate, evaluate, diagnose."""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
import warnings

import numpy as np
import pandas as pd

from . import io as io_mod
from .core import counter_rng
from .decide import EpsilonBundle, decisions_from_fit
from .estimate import EmOptions, fit_mixture, storey_pi0_gamma
from .evaluate import METHODS, perturbation_diagnostic, run_experiment, u_gamma_k
from .simulate import (
    ALTERNATIVES,
    CORRELATIONS,
    SETUPS,
    SimulationConfig,
    config_for_setup,
    simulate,
)


def _gamma_arg(text: str):
    if text == "auto":
        return "auto"
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"gamma must be 'auto' or a number, got {text!r}")


def _csv_floats(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _csv_names(text: str) -> list[str]:
    return [tok.strip() for tok in text.split(",") if tok.strip()]


def _add_table_args(sub):
    sub.add_argument("--input", required=True, help="input table (TSV or CSV)")
    sub.add_argument("--float32", action="store_true",
                     help="store covariates in 32-bit floats to halve memory")
    sub.add_argument("--standardize", action=argparse.BooleanOptionalAction,
                     default=True,
                     help="robustly center/scale covariates (median, IQR)")


def _add_fit_args(sub):
    sub.add_argument("--gamma", type=_gamma_arg, default="auto",
                     help="censoring point in (0,1), or 'auto' (default)")
    sub.add_argument("--fixed-k", type=float, default=None,
                     help="hold the alternative shape fixed")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--n-boot", type=int, default=100,
                     help="bootstrap resamples for the gamma selection")
    sub.add_argument("--tol", type=float, default=1e-6)
    sub.add_argument("--max-iter", type=int, default=200)


def _add_eps_args(sub):
    sub.add_argument("--alpha", type=float, default=0.05)
    sub.add_argument("--eps1", type=float, default=0.01)
    sub.add_argument("--eps2", type=float, default=0.99)
    sub.add_argument("--epsilon", type=float, default=1e-10)


def _add_sim_args(sub):
    sub.add_argument("--setup", choices=sorted(SETUPS), default=None,
                     help="named scenario; individual flags override its fields")
    sub.add_argument("--m", type=int, default=10_000)
    sub.add_argument("--eta0", type=float, default=2.5,
                     help="baseline null log-odds; inf gives the complete null")
    sub.add_argument("--kd", type=float, default=0.0,
                     help="covariate informativeness (logistic slope)")
    sub.add_argument("--ks", type=float, default=2.0, help="signal strength")
    sub.add_argument("--alternative", choices=ALTERNATIVES, default=None)
    sub.add_argument("--correlation", choices=CORRELATIONS, default=None)
    sub.add_argument("--rho", type=float, default=None)
    sub.add_argument("--phi", type=float, default=None)
    sub.add_argument("--block-size", type=int, default=None)
    sub.add_argument("--seed", type=int, default=0)


def _em_options(args) -> EmOptions:
    return EmOptions(
        tol=args.tol, max_iter=args.max_iter,
        n_boot=args.n_boot, fixed_k=args.fixed_k,
    )


def _eps_bundle(args) -> EpsilonBundle:
    return EpsilonBundle(eps1=args.eps1, eps2=args.eps2, epsilon=args.epsilon)


def _config_from_args(args) -> SimulationConfig:
    overrides = dict(m=args.m, eta0=args.eta0, k_d=args.kd, k_s=args.ks, seed=args.seed)
    for field, flag in (("alternative", args.alternative),
                        ("correlation", args.correlation),
                        ("rho", args.rho), ("phi", args.phi),
                        ("block_size", args.block_size)):
        if flag is not None:
            overrides[field] = flag
    if args.setup is not None:
        return config_for_setup(args.setup, **overrides)
    return SimulationConfig(**overrides)


def _load_table(args):
    data = io_mod.read_table(args.input, float32=args.float32)
    if data.covariates.shape[1]:
        spread = data.covariates.max(axis=0) - data.covariates.min(axis=0)
        for name, width in zip(data.covariate_names, spread):
            if width == 0:
                warnings.warn(
                    f"covariate {name!r} is constant; the ridge term in the "
                    "Newton solve keeps the fit well posed"
                )
    return data, data.to_table(standardize=args.standardize)


def _cmd_fit(args) -> int:
    data, table = _load_table(args)
    fit = fit_mixture(table, args.gamma, _em_options(args), counter_rng(args.seed, 0))
    record = io_mod.fit_record(fit, seed=args.seed, extra={
        "input": args.input, "standardize": args.standardize,
        "covariates": data.covariate_names,
        "n_hypotheses": table.m,
        "version": io_mod.package_version(),
    })
    record = {k: io_mod.jsonable(v) for k, v in record.items()}
    with open(args.output, "w") as fh:
        json.dump(record, fh, indent=2)
        fh.write("\n")
    return 0


def _cmd_reject(args) -> int:
    data, table = _load_table(args)
    fit = fit_mixture(table, args.gamma, _em_options(args), counter_rng(args.seed, 0))
    decisions = decisions_from_fit(table, fit, args.alpha, _eps_bundle(args))
    io_mod.write_decisions(
        args.output, data.ids, table.pvalues, decisions, fit=fit,
        seed=args.seed, extra={"input": args.input, "standardize": args.standardize},
    )
    print(f"rejected {decisions.n_rejected} of {table.m} hypotheses "
          f"at alpha={args.alpha}")
    return 0


def _cmd_simulate(args) -> int:
    config = _config_from_args(args)
    study = simulate(config, stream=0)
    io_mod.write_study(args.output, study, config=config, seed=args.seed)
    return 0


def _cmd_evaluate(args) -> int:
    config = _config_from_args(args)
    summaries = run_experiment(
        config, methods=args.methods, alpha_grid=args.alpha_grid,
        n_rep=args.reps, seed=args.seed, n_jobs=args.threads,
    )
    io_mod.write_summaries(args.output, summaries, extra={
        "config": {k: io_mod.jsonable(v) for k, v in vars(config).items()},
        "methods": args.methods, "alpha_grid": args.alpha_grid,
        "n_rep": args.reps, "seed": args.seed, "threads": args.threads,
    })
    return 0


def _cmd_diagnose(args) -> int:
    data, table = _load_table(args)
    opts = _em_options(args)
    if args.gamma == "auto":
        _, gamma = storey_pi0_gamma(table.pvalues, opts.n_boot, counter_rng(args.seed, 0))
    else:
        gamma = args.gamma
    rng = counter_rng(args.seed, 1)
    size = min(args.n_sample, table.m)
    j_sample = np.sort(rng.choice(table.m, size=size, replace=False))
    diffs = perturbation_diagnostic(
        table, gamma, opts, j_sample, alpha=args.alpha,
    )
    pd.DataFrame({
        "position": j_sample,
        "id": data.ids[j_sample],
        "threshold_gap": diffs,
    }).to_csv(args.output, sep="\t", index=False, float_format="%.17g")

    k_grid = np.arange(1, 1000) * 1e-3
    u_vals = u_gamma_k(gamma, k_grid)
    j_min = int(np.argmin(u_vals))
    io_mod.write_sidecar(args.output, {
        "gamma": gamma, "alpha": args.alpha, "n_sample": int(size),
        "median_threshold_gap": float(np.nanmedian(diffs)),
        "n_failed": int(np.isnan(diffs).sum()),
        "curvature_min_k": float(k_grid[j_min]),
        "curvature_min_u": float(u_vals[j_min]),
        "seed": args.seed, "input": args.input,
    })
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adafwer",
        description="Covariate-adaptive family-wise error rate control.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    sub = subparsers.add_parser("fit", help="fit the censored mixture, write JSON")
    _add_table_args(sub)
    _add_fit_args(sub)
    sub.add_argument("--output", required=True, help="output JSON path")
    sub.set_defaults(func=_cmd_fit)

    sub = subparsers.add_parser("reject", help="fit and write rejection decisions")
    _add_table_args(sub)
    _add_fit_args(sub)
    _add_eps_args(sub)
    sub.add_argument("--output", required=True, help="output decisions TSV")
    sub.set_defaults(func=_cmd_reject)

    sub = subparsers.add_parser("simulate", help="write one synthetic study")
    _add_sim_args(sub)
    sub.add_argument("--output", required=True, help="output study TSV")
    sub.set_defaults(func=_cmd_simulate)

    sub = subparsers.add_parser("evaluate", help="replicated experiment summaries")
    _add_sim_args(sub)
    sub.add_argument("--alpha-grid", type=_csv_floats, default=[0.05],
                     help="comma-separated target levels")
    sub.add_argument("--reps", type=int, default=100)
    sub.add_argument("--methods", type=_csv_names,
                     default=["adaptive", "bonferroni", "holm", "weighted_bonferroni"],
                     help=f"subset of {', '.join(METHODS)}")
    sub.add_argument("--threads", type=int, default=None,
                     help="worker count (default ADAFWER_THREADS or 1)")
    sub.add_argument("--output", required=True, help="output summary TSV")
    sub.set_defaults(func=_cmd_evaluate)

    sub = subparsers.add_parser("diagnose",
                                help="perturbation stability and curvature reports")
    _add_table_args(sub)
    _add_fit_args(sub)
    sub.add_argument("--alpha", type=float, default=0.05)
    sub.add_argument("--n-sample", type=int, default=50,
                     help="number of positions to perturb")
    sub.add_argument("--output", required=True, help="output report TSV")
    sub.set_defaults(func=_cmd_diagnose)
    return parser


def _apply_env(args) -> None:
    tmpdir = os.environ.get("ADAFWER_TMPDIR")
    if tmpdir:
        tempfile.tempdir = tmpdir
        os.environ.setdefault("TMPDIR", tmpdir)
    if getattr(args, "threads", "absent") is None:
        args.threads = int(os.environ.get("ADAFWER_THREADS", "1"))


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    _apply_env(args)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
