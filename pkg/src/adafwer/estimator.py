"""Scikit-learn style front door for the adaptive procedure.

The estimator is transductive: thresholds depend on the whole analyzed
set, so predictions apply to the data passed to fit, not to new rows.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .core import HypothesisTable, counter_rng
from .decide import DecisionSet, EpsilonBundle, decisions_from_fit
from .estimate import EmOptions, fit_mixture


class CovariateAdaptiveFwer(BaseEstimator):
    """Family-wise error rate control with covariate-driven thresholds.

    fit(X, pvalues) learns the logistic null-probability model and the
    alternative shape from the censoring indicators; predict() returns the
    rejection flags for the fitted hypotheses at level alpha.

    Parameters
    ----------
    alpha : target family-wise error rate.
    gamma : censoring point in (0, 1), or "auto" to select it by the
        bootstrap criterion.
    eps1, eps2 : winsorization bounds for the fitted null probabilities.
    epsilon : floor for the global threshold level.
    fixed_k : hold the alternative shape fixed instead of estimating it.
    standardize : robustly center/scale covariates before fitting.
    random_state : seed for the bootstrap draws.
    """

    def __init__(self, alpha: float = 0.05, gamma="auto",
                 eps1: float = 0.01, eps2: float = 0.99, epsilon: float = 1e-10,
                 fixed_k: float | None = None, standardize: bool = False,
                 tol: float = 1e-6, max_iter: int = 200,
                 irls_max_iter: int = 25, irls_tol: float = 1e-8,
                 k_min: float = 0.001, k_max: float = 0.999,
                 n_boot: int = 100, random_state: int = 0):
        self.alpha = alpha
        self.gamma = gamma
        self.eps1 = eps1
        self.eps2 = eps2
        self.epsilon = epsilon
        self.fixed_k = fixed_k
        self.standardize = standardize
        self.tol = tol
        self.max_iter = max_iter
        self.irls_max_iter = irls_max_iter
        self.irls_tol = irls_tol
        self.k_min = k_min
        self.k_max = k_max
        self.n_boot = n_boot
        self.random_state = random_state

    def _options(self) -> EmOptions:
        return EmOptions(
            tol=self.tol, max_iter=self.max_iter,
            irls_max_iter=self.irls_max_iter, irls_tol=self.irls_tol,
            k_min=self.k_min, k_max=self.k_max,
            n_boot=self.n_boot, fixed_k=self.fixed_k,
        )

    def _bundle(self) -> EpsilonBundle:
        return EpsilonBundle(eps1=self.eps1, eps2=self.eps2, epsilon=self.epsilon)

    def fit(self, X, pvalues):
        """Fit the mixture to covariates X (or None) and p-values."""
        table = HypothesisTable.from_raw(pvalues, X, standardize=self.standardize)
        rng = counter_rng(int(self.random_state), 0)
        fit = fit_mixture(table, self.gamma, self._options(), rng)
        self.table_ = table
        self.fit_ = fit
        self.beta_ = fit.beta
        self.k_ = fit.k
        self.gamma_ = fit.gamma
        self.pi_ = fit.pi
        self.pi0_ = fit.pi_smooth
        self.n_iter_ = fit.n_iter
        self.converged_ = fit.converged
        return self

    def _check_fitted(self):
        if not hasattr(self, "fit_"):
            raise NotFittedError("call fit before predicting")

    def decisions_at(self, alpha: float | None = None) -> DecisionSet:
        """Full decision detail (thresholds, weights, flags) at a level."""
        self._check_fitted()
        if alpha is None:
            alpha = self.alpha
        return decisions_from_fit(self.table_, self.fit_, float(alpha), self._bundle())

    def predict(self, X=None) -> np.ndarray:
        """Rejection flags for the fitted hypotheses.

        X is accepted for interface compatibility but must be None or the
        training covariates; thresholds are only defined for the set the
        estimator was fit on.
        """
        self._check_fitted()
        return self.decisions_at().rejected

    def fit_predict(self, X, pvalues) -> np.ndarray:
        return self.fit(X, pvalues).predict()
