"""Replicated experiments, error/power summaries, and stability diagnostics."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from joblib import Parallel, delayed
from scipy.special import ndtri

from . import baselines
from .core import CensoredData, HypothesisTable, MixtureParams, counter_rng
from .decide import EpsilonBundle, decisions_from_fit, thresholds_and_reject, winsorize_pi
from .estimate import EmOptions, fit_em_multistart, fit_mixture, plugin_pi0, small_p_init
from .simulate import SimulatedStudy, SimulationConfig, simulate

# bootstrap draws must not share the simulation stream for the replicate
_BOOT_STREAM_OFFSET = 1 << 32

METHODS = ("adaptive", "weighted_bonferroni", "bonferroni", "holm", "oracle")


def wilson_interval(successes: int, n: int, confidence: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n <= 0:
        return 0.0, 1.0
    z = float(ndtri(0.5 + confidence / 2.0))
    phat = successes / n
    denom = 1.0 + z * z / n
    center = (phat + z * z / (2 * n)) / denom
    half = z * np.sqrt(phat * (1.0 - phat) / n + z * z / (4 * n * n)) / denom
    # the interval contains phat by construction; rounding must not break that
    lo = min(max(center - half, 0.0), phat)
    hi = max(min(center + half, 1.0), phat)
    return lo, hi


@dataclass
class ReplicateScore:
    any_false: bool
    tpr: float
    n_false: int
    n_true: int


def score_replicate(rejected: np.ndarray, truth: np.ndarray) -> ReplicateScore:
    """False/true rejection counts for one replicate.

    truth uses 1 for alternatives.  The true positive rate is the rejected
    fraction of alternatives, 0 when there are none.
    """
    rejected = np.asarray(rejected, dtype=bool)
    truth = np.asarray(truth)
    if rejected.shape != truth.shape:
        raise ValueError(
            f"length mismatch: {rejected.shape} rejections vs {truth.shape} truths"
        )
    is_alt = truth == 1
    v = int((rejected & ~is_alt).sum())
    s = int((rejected & is_alt).sum())
    m1 = int(is_alt.sum())
    return ReplicateScore(
        any_false=v >= 1,
        tpr=s / m1 if m1 > 0 else 0.0,
        n_false=v,
        n_true=s,
    )


@dataclass
class EvaluationSummary:
    method: str
    alpha: float
    n_rep: int
    n_failed: int
    fwer_hat: float
    fwer_ci: tuple[float, float]
    tpr_hat: float
    tpr_se: float


class _ReplicateContext:
    """Shares the adaptive fit between methods within one replicate."""

    def __init__(self, study: SimulatedStudy, config: SimulationConfig,
                 opts: EmOptions, eps: EpsilonBundle, rng: np.random.Generator):
        self.study = study
        self.config = config
        self.opts = opts
        self.eps = eps
        self.rng = rng
        self._fit = None

    @property
    def fit(self):
        if self._fit is None:
            self._fit = fit_mixture(self.study.table, "auto", self.opts, self.rng)
        return self._fit

    def alternative_spec(self) -> baselines.AlternativeSpec:
        family = "normal_shift" if self.config.alternative == "normal" else "shifted_gamma"
        return baselines.AlternativeSpec(family=family, shift=self.config.k_s)


def _run_method(name: str, ctx: _ReplicateContext, alpha: float) -> np.ndarray:
    study = ctx.study
    p = study.table.pvalues
    if name == "adaptive":
        return decisions_from_fit(study.table, ctx.fit, alpha, ctx.eps).rejected
    if name == "weighted_bonferroni":
        pi_hat = winsorize_pi(ctx.fit.pi, ctx.eps.eps1, ctx.eps.eps2)
        return baselines.weighted_bonferroni(p, pi_hat, alpha)
    if name == "bonferroni":
        return baselines.bonferroni(p, alpha)
    if name == "holm":
        return baselines.holm(p, alpha)
    if name == "oracle":
        return baselines.oracle_reject(
            p, study.pi_true, ctx.alternative_spec(), alpha
        ).rejected
    raise ValueError(f"unknown method {name!r}")


def _one_replicate(config, methods, alpha_grid, seed, r, opts, eps):
    study = simulate(config, stream=r)
    rng = counter_rng(seed, _BOOT_STREAM_OFFSET + r)
    ctx = _ReplicateContext(study, config, opts, eps, rng)
    out: dict = {}
    for name in methods:
        try:
            scores = []
            for alpha in alpha_grid:
                rejected = _run_method(name, ctx, alpha)
                sc = score_replicate(rejected, study.truth)
                scores.append((sc.any_false, sc.tpr))
            out[name] = scores
        except Exception:
            out[name] = None
    return out


def run_experiment(
    config: SimulationConfig,
    methods=("adaptive", "bonferroni", "holm", "weighted_bonferroni"),
    alpha_grid=(0.05,),
    n_rep: int = 100,
    seed: int = 0,
    opts: EmOptions | None = None,
    eps: EpsilonBundle | None = None,
    n_jobs: int = 1,
) -> list[EvaluationSummary]:
    """Replicate the study n_rep times and summarize each method per alpha.

    Replicate r uses the random stream (seed, r), so results do not depend
    on worker count or execution order.  A method that raises inside one
    replicate is excluded from that replicate only and counted as failed.
    """
    for name in methods:
        if name not in METHODS:
            raise ValueError(f"unknown method {name!r}; known: {METHODS}")
    opts = opts or EmOptions()
    eps = eps or EpsilonBundle()
    config = replace(config, seed=seed)
    alpha_grid = [float(a) for a in alpha_grid]

    if n_jobs == 1:
        results = [
            _one_replicate(config, methods, alpha_grid, seed, r, opts, eps)
            for r in range(n_rep)
        ]
    else:
        results = Parallel(n_jobs=n_jobs)(
            delayed(_one_replicate)(config, methods, alpha_grid, seed, r, opts, eps)
            for r in range(n_rep)
        )

    summaries = []
    for name in methods:
        kept = [res[name] for res in results if res[name] is not None]
        n_failed = n_rep - len(kept)
        for a_idx, alpha in enumerate(alpha_grid):
            falses = np.array([rep[a_idx][0] for rep in kept], dtype=bool)
            tprs = np.array([rep[a_idx][1] for rep in kept], dtype=np.float64)
            n_eff = falses.size
            fwer_hat = float(falses.mean()) if n_eff else float("nan")
            tpr_hat = float(tprs.mean()) if n_eff else float("nan")
            tpr_se = float(tprs.std(ddof=1) / np.sqrt(n_eff)) if n_eff > 1 else 0.0
            summaries.append(EvaluationSummary(
                method=name, alpha=alpha, n_rep=n_eff, n_failed=n_failed,
                fwer_hat=fwer_hat,
                fwer_ci=wilson_interval(int(falses.sum()), n_eff),
                tpr_hat=tpr_hat, tpr_se=tpr_se,
            ))
    return summaries


def perturbation_diagnostic(
    table: HypothesisTable,
    gamma: float,
    opts: EmOptions | None = None,
    j_sample=None,
    alpha: float = 0.05,
    eps: EpsilonBundle | None = None,
    rng: np.random.Generator | None = None,
    n_sample: int = 50,
) -> np.ndarray:
    """Threshold sensitivity to one p-value: |t_j(p_j -> 0) - t_j(p_j -> 1)|.

    For each sampled index j the whole pipeline is refit twice at the
    given censoring point, once with p_j set to 0 and once to 1; the
    overall null fraction and the small-p starting point are recomputed
    each time.  Returns the absolute threshold differences at the sampled
    positions (NaN where either refit failed to converge).
    """
    opts = opts or EmOptions()
    eps = eps or EpsilonBundle()
    if j_sample is None:
        rng = rng or counter_rng(0, 0)
        size = min(n_sample, table.m)
        j_sample = np.sort(rng.choice(table.m, size=size, replace=False))
    j_sample = np.asarray(j_sample, dtype=np.intp)
    if j_sample.size and (j_sample.min() < 0 or j_sample.max() >= table.m):
        raise ValueError("perturbation index out of range")

    diffs = np.empty(j_sample.size)
    base = table.pvalues
    for out_idx, j in enumerate(j_sample):
        t_at = []
        failed = False
        for new_value in (0.0, 1.0):
            p2 = base.copy()
            p2[j] = new_value
            pi_s = plugin_pi0(p2, gamma)
            init = small_p_init(p2, pi_s, table.n_coef, opts)
            t2 = HypothesisTable(pvalues=p2, design=table.design)
            cens = CensoredData(y=p2 > gamma, gamma=gamma)
            fit = fit_em_multistart(t2, cens, init, opts, pi_smooth=pi_s)
            if not fit.converged:
                failed = True
                break
            ds = thresholds_and_reject(p2, fit.pi, gamma, fit.k, alpha, eps)
            t_at.append(float(ds.thresholds[j]))
        diffs[out_idx] = float("nan") if failed else abs(t_at[0] - t_at[1])
    return diffs


def u_gamma_k(gamma, k):
    """Curvature factor of the censored likelihood at (gamma, k).

    Larger values mean the censored-data objective identifies the shape
    more sharply.  Vectorized in k (and gamma).
    """
    gamma_arr = np.asarray(gamma, dtype=np.float64)
    k_arr = np.asarray(k, dtype=np.float64)
    gk = gamma_arr ** k_arr
    half_gap = 0.5 * (gamma_arr - gk)
    a = 1.0 - gamma_arr + half_gap
    b = gamma_arr - half_gap
    num = 2.0 * a * b - (gamma_arr - gk) * (gamma_arr + gk - 1.0)
    out = num / (a * a * b * b)
    if out.ndim == 0:
        return float(out)
    return out
