"""Turning a fitted mixture into rejection decisions.

The decision rule winsorizes the fitted null probabilities, solves for the
global level tau that makes the exceedance budget sum(y_i t_i) / (1-gamma)
equal alpha, and converts tau into a per-hypothesis p-value threshold.  A
hypothesis is rejected when its p-value is at most min(threshold, gamma).
The same thresholds can be read as a weighted Bonferroni procedure, which
is exposed through the weights vector.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .core import HypothesisTable, MixtureFit

# exp() clip so extreme thresholds stay finite; the rejection rule caps
# everything at gamma anyway
_LOG_T_MAX = 690.0


@dataclass
class EpsilonBundle:
    """Stabilization constants: winsorization bounds and the tau floor."""

    eps1: float = 0.01
    eps2: float = 0.99
    epsilon: float = 1e-10

    def __post_init__(self):
        if not 0.0 <= self.eps1 < self.eps2 <= 1.0:
            raise ValueError(
                f"need 0 <= eps1 < eps2 <= 1, got ({self.eps1!r}, {self.eps2!r})"
            )
        if self.epsilon < 0.0:
            raise ValueError(f"tau floor must be >= 0, got {self.epsilon!r}")


@dataclass
class DecisionSet:
    """Thresholds, rejection flags, and the weighted-Bonferroni view."""

    alpha: float
    gamma: float | None
    k: float | None
    eps: EpsilonBundle | None
    tau_tilde: float
    tau_hat: float
    thresholds: np.ndarray
    rejected: np.ndarray
    weights: np.ndarray | None = None
    pi_hat: np.ndarray | None = None
    budget: float = float("nan")

    @property
    def n_rejected(self) -> int:
        return int(self.rejected.sum())

    @property
    def effective_thresholds(self) -> np.ndarray:
        if self.gamma is None:
            return self.thresholds
        return np.minimum(self.thresholds, self.gamma)


def winsorize_pi(pi_tilde: np.ndarray, eps1: float = 0.01, eps2: float = 0.99) -> np.ndarray:
    """Clamp fitted null probabilities into [eps1, eps2]."""
    if not 0.0 <= eps1 < eps2 <= 1.0:
        raise ValueError(f"need 0 <= eps1 < eps2 <= 1, got ({eps1!r}, {eps2!r})")
    return np.clip(pi_tilde, eps1, eps2)


def _log_odds(pi: np.ndarray) -> np.ndarray:
    """log((1 - pi) / pi), elementwise, tolerating the endpoints."""
    with np.errstate(divide="ignore"):
        return np.log1p(-pi) - np.log(pi)


def _log_tau_tilde(pi_hat, y, k, alpha, gamma) -> float:
    if not np.any(y):
        return -np.inf
    log_r = _log_odds(pi_hat)
    s = logsumexp(log_r[y] / (1.0 - k)) - np.log(alpha * (1.0 - gamma))
    return float(np.log(k) + (1.0 - k) * s)


def compute_tau(
    pi_hat: np.ndarray,
    y: np.ndarray,
    k: float,
    alpha: float,
    gamma: float,
    epsilon: float = 1e-10,
) -> tuple[float, float]:
    """Budget-matching level tau and its floored version.

    tau_tilde is the closed-form solution making the exceedance budget
    equal alpha (0 when no p-value exceeds gamma); tau_hat floors it at
    epsilon.  Internally computed on the log scale so extreme odds ratios
    cannot overflow.
    """
    log_tt = _log_tau_tilde(pi_hat, y, k, alpha, gamma)
    tau_tilde = float(np.exp(min(log_tt, _LOG_T_MAX)))
    return tau_tilde, max(tau_tilde, epsilon)


def bonferroni_weights(
    pi_tilde: np.ndarray, y: np.ndarray, gamma: float, k: float
) -> np.ndarray:
    """Per-hypothesis weights giving the weighted-Bonferroni reading.

    w_i is proportional to ((1 - pi_i) / pi_i) ** (1 / (1 - k)) and
    normalized so that the exceedance-weighted sum is 1 - gamma.  With no
    winsorization and no tau floor, alpha * w_i equals the rejection
    threshold exactly.  All y = 0 leaves the normalizer empty; that
    returns +inf sentinels with a warning.
    """
    if not np.any(y):
        warnings.warn("no p-value exceeds gamma; weights are undefined (+inf)")
        return np.full(pi_tilde.shape, np.inf)
    log_r = _log_odds(pi_tilde)
    log_num = log_r / (1.0 - k)
    log_den = logsumexp(log_num[y]) - np.log1p(-gamma)
    return np.exp(log_num - log_den)


def thresholds_and_reject(
    pvalues: np.ndarray,
    pi_tilde: np.ndarray,
    gamma: float,
    k: float,
    alpha: float,
    eps: EpsilonBundle | None = None,
) -> DecisionSet:
    """Full decision chain: winsorize, solve for tau, threshold, reject.

    Thresholds are [(1 - pi_hat) k / (pi_hat tau_hat)] ** (1 / (1 - k));
    hypothesis i is rejected when p_i <= min(threshold_i, gamma).  When
    every p-value is censored (none exceed gamma) the level has no data to
    set it, so thresholds collapse to the gamma cap and a warning is
    raised.  Weights use the unwinsorized probabilities, matching the
    weighted-Bonferroni identity.
    """
    if eps is None:
        eps = EpsilonBundle()
    pvalues = np.asarray(pvalues, dtype=np.float64)
    pi_hat = winsorize_pi(np.asarray(pi_tilde, dtype=np.float64), eps.eps1, eps.eps2)
    y = pvalues > gamma

    log_tt = _log_tau_tilde(pi_hat, y, k, alpha, gamma)
    tau_tilde = float(np.exp(min(log_tt, _LOG_T_MAX)))
    tau_hat = max(tau_tilde, eps.epsilon)

    if not np.any(y):
        warnings.warn(
            "every p-value is at or below gamma; thresholds capped at gamma"
        )
        thresholds = np.full(pvalues.shape, gamma)
        weights = np.full(pvalues.shape, np.inf)
    else:
        with np.errstate(divide="ignore"):
            log_tau_hat = max(log_tt, np.log(eps.epsilon) if eps.epsilon > 0 else -np.inf)
        log_r = _log_odds(pi_hat)
        log_t = (log_r + np.log(k) - log_tau_hat) / (1.0 - k)
        thresholds = np.exp(np.clip(log_t, -746.0, _LOG_T_MAX))
        weights = bonferroni_weights(np.asarray(pi_tilde, dtype=np.float64), y, gamma, k)

    rejected = pvalues <= np.minimum(thresholds, gamma)
    budget = float(thresholds[y].sum() / (1.0 - gamma))
    return DecisionSet(
        alpha=alpha, gamma=gamma, k=k, eps=eps,
        tau_tilde=tau_tilde, tau_hat=tau_hat,
        thresholds=thresholds, rejected=rejected,
        weights=weights, pi_hat=pi_hat, budget=budget,
    )


def decisions_from_fit(
    table: HypothesisTable,
    fit: MixtureFit,
    alpha: float,
    eps: EpsilonBundle | None = None,
) -> DecisionSet:
    """Apply the decision chain to a fitted mixture."""
    return thresholds_and_reject(
        table.pvalues, fit.pi, fit.gamma, fit.k, alpha, eps
    )
