"""Shared types and the censored two-group mixture likelihood.

Each hypothesis carries a p-value and a covariate vector.  The model is a
mixture: with probability pi(x) the hypothesis is null and its p-value is
uniform on [0, 1]; otherwise the p-value has density k * p**(k-1) for a
shape 0 < k < 1.  The null probability follows a logistic regression on
the covariates.  Estimation only ever sees the p-values through the
censoring indicator y = 1{p > gamma}, which is what makes the fitted
thresholds usable for error control afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .validation import add_intercept, check_covariates, check_pvalues, robust_standardize

# box constraint for the logistic coefficients during fitting
BETA_BOUND = 15.0


def counter_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator giving independent streams per (seed, stream)."""
    mask = (1 << 64) - 1
    return np.random.Generator(np.random.Philox(key=[seed & mask, stream & mask]))


@dataclass
class HypothesisTable:
    """p-values plus the design matrix (intercept column included)."""

    pvalues: np.ndarray
    design: np.ndarray

    @classmethod
    def from_raw(cls, pvalues, covariates=None, standardize: bool = False) -> "HypothesisTable":
        p = check_pvalues(pvalues)
        if covariates is None:
            x = np.empty((p.size, 0))
        else:
            x = check_covariates(covariates, p.size)
        if standardize and x.shape[1] > 0:
            x = robust_standardize(x)
        return cls(pvalues=p, design=add_intercept(x))

    @property
    def m(self) -> int:
        return self.pvalues.size

    @property
    def n_coef(self) -> int:
        return self.design.shape[1]


@dataclass
class CensoredData:
    """Censoring indicators y = 1{p > gamma} at a fixed censoring point."""

    y: np.ndarray
    gamma: float

    @property
    def n_exceed(self) -> int:
        return int(self.y.sum())


@dataclass
class MixtureParams:
    beta: np.ndarray
    k: float


@dataclass
class MixtureFit:
    """Fitted mixture: parameters plus per-hypothesis quantities."""

    params: MixtureParams
    pi: np.ndarray            # fitted null probability per hypothesis, not winsorized
    posterior_null: np.ndarray
    loglik_trace: np.ndarray
    n_iter: int
    converged: bool
    gamma: float
    pi_smooth: float          # overall null fraction estimate used by the initializer
    degenerate: bool = False
    init: object = None

    @property
    def beta(self) -> np.ndarray:
        return self.params.beta

    @property
    def k(self) -> float:
        return self.params.k


def censor(pvalues: np.ndarray, gamma: float) -> np.ndarray:
    """Indicator of exceeding the censoring point (strict inequality)."""
    return pvalues > gamma


def logistic_prob(design: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """Null probability per hypothesis under the logistic model."""
    return expit(design @ beta)


def bernoulli_terms(y: np.ndarray, gamma: float, k: float) -> tuple[np.ndarray, np.ndarray]:
    """Probability of the observed indicator under each mixture component.

    Under the null the p-value is uniform, so P(y=1) = 1 - gamma.  Under
    the alternative P(y=1) = 1 - gamma**k.  Returns (null, alternative)
    arrays aligned with y.
    """
    gk = gamma ** k
    b0 = np.where(y, 1.0 - gamma, gamma)
    b1 = np.where(y, 1.0 - gk, gk)
    return b0, b1


def censored_loglik(pi: np.ndarray, b0: np.ndarray, b1: np.ndarray) -> float:
    """Log-likelihood of the censoring indicators under the mixture."""
    return float(np.log(pi * b0 + (1.0 - pi) * b1).sum())


def loglik_at(table: HypothesisTable, cens: CensoredData, params: MixtureParams) -> float:
    pi = logistic_prob(table.design, params.beta)
    b0, b1 = bernoulli_terms(cens.y, cens.gamma, params.k)
    return censored_loglik(pi, b0, b1)
