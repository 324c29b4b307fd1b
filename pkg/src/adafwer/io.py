"""Table ingestion and result serialization (TSV plus JSON sidecars)."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import pandas as pd

from .core import HypothesisTable, MixtureFit
from .decide import DecisionSet
from .evaluate import EvaluationSummary
from .simulate import SimulatedStudy

# columns never treated as covariates when reading a study file back
RESERVED_COLUMNS = ("truth", "z")

_FLOAT_FMT = "%.17g"


def package_version() -> str:
    try:
        from importlib.metadata import version

        return version("adafwer")
    except Exception:
        return "unknown"


@dataclass
class TableData:
    ids: np.ndarray
    pvalues: np.ndarray
    covariates: np.ndarray
    covariate_names: list[str]

    def to_table(self, standardize: bool = False) -> HypothesisTable:
        cov = self.covariates if self.covariates.shape[1] else None
        return HypothesisTable.from_raw(self.pvalues, cov, standardize=standardize)


def _detect_sep(path: Path) -> str:
    with open(path, "r") as fh:
        header = fh.readline()
    return "\t" if "\t" in header else ","


def read_table(path, float32: bool = False) -> TableData:
    """Read a delimited table with id and pvalue columns plus covariates.

    Tab or comma delimited with a header.  Rows with missing values are
    dropped with a warning naming the file lines; out-of-range p-values
    raise with the offending line.  Columns named 'truth' or 'z' are
    ignored as covariates so simulated study files can be read back
    directly.
    """
    path = Path(path)
    sep = _detect_sep(path)
    # exactly-rounded parsing so %.17g output round trips bit for bit
    df = pd.read_csv(path, sep=sep, dtype={"id": str}, float_precision="round_trip")
    for required in ("id", "pvalue"):
        if required not in df.columns:
            raise ValueError(f"{path}: missing required column {required!r}")
    if len(df) == 0:
        raise ValueError(f"{path}: table has a header but no rows")

    na_rows = df.index[df.isna().any(axis=1)]
    if len(na_rows):
        lines = ", ".join(str(i + 2) for i in na_rows[:20])
        more = "" if len(na_rows) <= 20 else f" (+{len(na_rows) - 20} more)"
        warnings.warn(f"{path}: dropped rows with missing values at lines {lines}{more}")
        df = df.drop(index=na_rows)
        if len(df) == 0:
            raise ValueError(f"{path}: no complete rows left after dropping missing values")

    p = df["pvalue"].to_numpy(dtype=np.float64)
    bad = np.flatnonzero((p < 0.0) | (p > 1.0) | ~np.isfinite(p))
    if bad.size:
        line = int(df.index[bad[0]]) + 2
        raise ValueError(
            f"{path}: p-value {p[bad[0]]!r} out of [0, 1] at line {line}"
        )

    ids = df["id"].to_numpy(dtype=object)
    if len(np.unique(ids)) != len(ids):
        warnings.warn(f"{path}: duplicate ids present")

    names = [c for c in df.columns if c not in ("id", "pvalue") + RESERVED_COLUMNS]
    dtype = np.float32 if float32 else np.float64
    cov = df[names].to_numpy(dtype=dtype) if names else np.empty((len(df), 0))
    return TableData(ids=ids, pvalues=p, covariates=cov, covariate_names=names)


def sidecar_path(path) -> Path:
    path = Path(path)
    return Path(str(path) + ".json")


def jsonable(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    return value


def write_sidecar(path, record: dict) -> Path:
    """Write the JSON sidecar for an output file and return its path."""
    record = {key: jsonable(val) for key, val in record.items()}
    record.setdefault("version", package_version())
    record.setdefault("timestamp", datetime.now(timezone.utc).isoformat())
    out = sidecar_path(path)
    with open(out, "w") as fh:
        json.dump(record, fh, indent=2)
        fh.write("\n")
    return out


def write_table(path, ids, pvalues, covariates=None, covariate_names=None) -> None:
    """Plain table writer: id, pvalue, covariate columns."""
    data = {"id": ids, "pvalue": np.asarray(pvalues, dtype=np.float64)}
    if covariates is not None:
        cov = np.asarray(covariates)
        if cov.ndim == 1:
            cov = cov[:, None]
        if covariate_names is None:
            covariate_names = [f"x{j + 1}" for j in range(cov.shape[1])]
        for j, name in enumerate(covariate_names):
            data[name] = cov[:, j]
    pd.DataFrame(data).to_csv(path, sep="\t", index=False, float_format=_FLOAT_FMT)


def write_study(path, study: SimulatedStudy, config=None, seed=None) -> None:
    """Simulated study TSV (with truth and z columns) plus config sidecar."""
    ids = np.array([f"h{i + 1}" for i in range(study.m)], dtype=object)
    pd.DataFrame({
        "id": ids,
        "pvalue": study.table.pvalues,
        "x1": study.covariate,
        "truth": study.truth.astype(int),
        "z": study.z,
    }).to_csv(path, sep="\t", index=False, float_format=_FLOAT_FMT)
    record = {"output": "study", "m": study.m}
    if config is not None:
        record["config"] = {k: jsonable(v) for k, v in vars(config).items()}
    if seed is not None:
        record["seed"] = seed
    write_sidecar(path, record)


def write_decisions(
    path,
    ids,
    pvalues,
    decisions: DecisionSet,
    fit: MixtureFit | None = None,
    seed=None,
    extra: dict | None = None,
) -> None:
    """Decision TSV (id, pvalue, pi_hat, weight, threshold, reject) + sidecar.

    Floats carry 17 significant digits so files round trip exactly.
    """
    m = len(np.asarray(pvalues))
    pi_hat = decisions.pi_hat if decisions.pi_hat is not None else np.full(m, np.nan)
    weights = decisions.weights if decisions.weights is not None else np.full(m, np.nan)
    pd.DataFrame({
        "id": ids,
        "pvalue": np.asarray(pvalues, dtype=np.float64),
        "pi_hat": pi_hat,
        "weight": weights,
        "threshold": decisions.thresholds,
        "reject": decisions.rejected.astype(int),
    }).to_csv(path, sep="\t", index=False, float_format=_FLOAT_FMT)

    record = {
        "alpha": decisions.alpha,
        "gamma": decisions.gamma,
        "k": decisions.k,
        "tau_tilde": decisions.tau_tilde,
        "tau_hat": decisions.tau_hat,
        "n_rejected": decisions.n_rejected,
        "n_hypotheses": m,
    }
    if decisions.eps is not None:
        record["eps1"] = decisions.eps.eps1
        record["eps2"] = decisions.eps.eps2
        record["epsilon"] = decisions.eps.epsilon
    if fit is not None:
        record.update({
            "beta": fit.beta,
            "pi0": fit.pi_smooth,
            "em_iterations": fit.n_iter,
            "em_converged": fit.converged,
        })
    if seed is not None:
        record["seed"] = seed
    if extra:
        record.update(extra)
    write_sidecar(path, record)


def fit_record(fit: MixtureFit, seed=None, extra: dict | None = None) -> dict:
    """JSON-ready summary of a fitted mixture."""
    record = {
        "beta": fit.beta,
        "k": fit.k,
        "gamma": fit.gamma,
        "pi0": fit.pi_smooth,
        "em_iterations": fit.n_iter,
        "em_converged": fit.converged,
        "loglik": float(fit.loglik_trace[-1]),
        "degenerate_init": fit.degenerate,
    }
    if seed is not None:
        record["seed"] = seed
    if extra:
        record.update(extra)
    return record


def write_summaries(path, summaries: list[EvaluationSummary], extra: dict | None = None) -> None:
    """Long-format experiment results: one row per (method, alpha)."""
    pd.DataFrame([
        {
            "method": s.method,
            "alpha": s.alpha,
            "n_rep": s.n_rep,
            "n_failed": s.n_failed,
            "fwer": s.fwer_hat,
            "fwer_lo": s.fwer_ci[0],
            "fwer_hi": s.fwer_ci[1],
            "tpr": s.tpr_hat,
            "tpr_se": s.tpr_se,
        }
        for s in summaries
    ]).to_csv(path, sep="\t", index=False, float_format=_FLOAT_FMT)
    write_sidecar(path, dict(extra or {}))
