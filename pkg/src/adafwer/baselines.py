"""Reference procedures: Bonferroni, Holm, weighted Bonferroni, oracle.

The oracle knows the true per-hypothesis null probabilities and the true
alternative p-value density.  It solves the same budget problem as the
adaptive procedure but without censoring or estimation, which makes it an
upper benchmark for power.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt

import numpy as np
from scipy.special import ndtr, ndtri
from scipy.stats import gamma as gamma_dist
from scipy.stats import norm

from .decide import DecisionSet

_SQRT2 = sqrt(2.0)
# below this shift the shifted-gamma likelihood ratio is not monotone in z
_GAMMA_MONOTONE_MIN = 2.0 * _SQRT2 - 2.0


@dataclass
class AlternativeSpec:
    """Alternative p-value density family.

    beta: density k * p**(k-1) with shape 0 < k < 1.
    normal_shift: one-sided p-value of a unit-variance z-score with mean
        shift; density is the likelihood ratio phi(z - shift) / phi(z) at
        z equal to the upper quantile of p.
    shifted_gamma: z-score drawn as delta + Gamma(shape 2, scale 1/sqrt 2)
        with delta chosen so the mean is `shift`.
    """

    family: str
    k: float | None = None
    shift: float | None = None

    def __post_init__(self):
        if self.family == "beta":
            if self.k is None or not 0.0 < self.k < 1.0:
                raise ValueError(f"beta family needs shape in (0, 1), got {self.k!r}")
        elif self.family in ("normal_shift", "shifted_gamma"):
            if self.shift is None or self.shift < 0.0:
                raise ValueError(
                    f"{self.family} family needs a nonnegative shift, got {self.shift!r}"
                )
        else:
            raise ValueError(f"unknown alternative family {self.family!r}")

    @property
    def delta(self) -> float:
        """Location of the shifted gamma (its mean equals `shift`)."""
        return self.shift - _SQRT2


def _z_upper(p: np.ndarray) -> np.ndarray:
    """z with upper-tail probability p, i.e. the (1-p) normal quantile."""
    return -ndtri(p)


def f1_density(spec: AlternativeSpec, p) -> np.ndarray | float:
    """Alternative density of the p-value, elementwise on (0, 1]."""
    p_arr = np.asarray(p, dtype=np.float64)
    scalar = p_arr.ndim == 0
    p_arr = np.atleast_1d(p_arr)
    if np.any(p_arr <= 0.0) or np.any(p_arr > 1.0):
        raise ValueError("density defined on (0, 1]")
    if spec.family == "beta":
        out = spec.k * p_arr ** (spec.k - 1.0)
    elif spec.family == "normal_shift":
        z = _z_upper(p_arr)
        out = np.exp(spec.shift * z - 0.5 * spec.shift ** 2)
    else:
        z = _z_upper(p_arr)
        log_ratio = gamma_dist.logpdf(z, a=2.0, loc=spec.delta, scale=1.0 / _SQRT2)
        log_ratio = log_ratio - norm.logpdf(z)
        out = np.exp(log_ratio)
    return float(out[0]) if scalar else out


def _gamma_log_ratio(z: np.ndarray, spec: AlternativeSpec) -> np.ndarray:
    return gamma_dist.logpdf(z, a=2.0, loc=spec.delta, scale=1.0 / _SQRT2) - norm.logpdf(z)


def f1_inverse(spec: AlternativeSpec, v) -> np.ndarray | float:
    """Inverse of the alternative density, capped at 1.

    The supported families have strictly decreasing density in p (for
    shifted_gamma this requires a large enough shift), so the inverse is
    well defined; values at or below the density at 1 map to 1, and the
    inverse tends to 0 as v grows.
    """
    v_arr = np.asarray(v, dtype=np.float64)
    scalar = v_arr.ndim == 0
    v_arr = np.atleast_1d(v_arr)
    if np.any(v_arr <= 0.0):
        raise ValueError("inverse defined for positive density values")

    if spec.family == "beta":
        out = np.minimum((v_arr / spec.k) ** (1.0 / (spec.k - 1.0)), 1.0)
    elif spec.family == "normal_shift":
        if spec.shift <= 0.0:
            raise ValueError("constant density (shift 0) has no inverse")
        z = np.log(v_arr) / spec.shift + 0.5 * spec.shift
        out = np.minimum(ndtr(-z), 1.0)
    else:
        if spec.shift <= _GAMMA_MONOTONE_MIN:
            raise ValueError(
                "shifted_gamma density is not monotone for shift <= "
                f"{_GAMMA_MONOTONE_MIN:.4f}"
            )
        # the log likelihood ratio is increasing in z above delta; bisect
        # in z and map back through the p-value transform
        log_v = np.log(v_arr)
        lo = np.full(v_arr.shape, spec.delta + 1e-12)
        hi = np.full(v_arr.shape, spec.delta + 1.0)
        for _ in range(80):
            need = _gamma_log_ratio(hi, spec) < log_v
            if not np.any(need):
                break
            hi = np.where(need, spec.delta + (hi - spec.delta) * 2.0, hi)
        for _ in range(90):
            mid = 0.5 * (lo + hi)
            low_side = _gamma_log_ratio(mid, spec) < log_v
            lo = np.where(low_side, mid, lo)
            hi = np.where(low_side, hi, mid)
        out = np.minimum(ndtr(-0.5 * (lo + hi)), 1.0)
    return float(out[0]) if scalar else out


def oracle_reject(
    pvalues: np.ndarray,
    pi_true: np.ndarray,
    spec: AlternativeSpec,
    alpha: float,
) -> DecisionSet:
    """Optimal rejection rule with known null probabilities and density.

    Finds the smallest level tau at which the capped budget
    sum_i pi_i * min(f1_inverse(pi_i tau / (1 - pi_i)), 1) drops to alpha,
    by bisection on log tau, then thresholds each hypothesis at its own
    inverse-density value (capped at 1).
    """
    pvalues = np.asarray(pvalues, dtype=np.float64)
    pi_true = np.asarray(pi_true, dtype=np.float64)
    if np.any(pi_true <= 0.0) or np.any(pi_true >= 1.0):
        raise ValueError("oracle needs null probabilities strictly inside (0, 1)")
    odds = pi_true / (1.0 - pi_true)

    def budget(log_tau: float) -> float:
        t = np.minimum(f1_inverse(spec, odds * np.exp(log_tau)), 1.0)
        return float(pi_true @ t)

    log_lo, log_hi = np.log(1e-12), np.log(1e12)
    while budget(log_hi) > alpha:
        log_hi += np.log(10.0)
    if budget(log_lo) <= alpha:
        log_star = log_lo
    else:
        for _ in range(60):
            mid = 0.5 * (log_lo + log_hi)
            if budget(mid) <= alpha:
                log_hi = mid
            else:
                log_lo = mid
        log_star = log_hi
    tau_star = float(np.exp(log_star))
    thresholds = np.minimum(f1_inverse(spec, odds * tau_star), 1.0)
    rejected = pvalues <= thresholds
    return DecisionSet(
        alpha=alpha, gamma=None, k=None, eps=None,
        tau_tilde=tau_star, tau_hat=tau_star,
        thresholds=thresholds, rejected=rejected,
        weights=None, pi_hat=pi_true,
        budget=float(pi_true @ thresholds),
    )


def bonferroni(pvalues: np.ndarray, alpha: float) -> np.ndarray:
    """Reject p <= alpha / m."""
    pvalues = np.asarray(pvalues, dtype=np.float64)
    return pvalues <= alpha / pvalues.size


def holm(pvalues: np.ndarray, alpha: float) -> np.ndarray:
    """Step-down procedure: compare order statistics to alpha / (m - j + 1).

    Rejects every hypothesis ranked before the first failure.  Ties are
    ordered by original index so the result is deterministic.
    """
    pvalues = np.asarray(pvalues, dtype=np.float64)
    m = pvalues.size
    order = np.argsort(pvalues, kind="stable")
    cutoffs = alpha / (m - np.arange(m))
    ok = pvalues[order] <= cutoffs
    n_pass = m if ok.all() else int(np.argmin(ok))
    rejected = np.zeros(m, dtype=bool)
    rejected[order[:n_pass]] = True
    return rejected


def weighted_bonferroni(pvalues: np.ndarray, pi_hat: np.ndarray, alpha: float) -> np.ndarray:
    """Reject p < alpha / (m * pi_hat), strict inequality."""
    pvalues = np.asarray(pvalues, dtype=np.float64)
    pi_hat = np.asarray(pi_hat, dtype=np.float64)
    if np.any(pi_hat <= 0.0) or np.any(pi_hat > 1.0):
        raise ValueError("weighted Bonferroni needs probabilities in (0, 1]")
    return pvalues < alpha / (pvalues.size * pi_hat)
