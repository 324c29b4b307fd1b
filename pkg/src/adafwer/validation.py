"""Input checking and covariate preparation helpers."""

from __future__ import annotations

import numpy as np


def check_pvalues(pvalues) -> np.ndarray:
    """Coerce to a 1-D float64 array of values in [0, 1].

    Accepts scalars and column vectors; a genuinely 2-D array is almost
    always a caller mistake and raises.  Raises ValueError on empty
    input, non-finite entries, or entries outside the unit interval.
    """
    p = np.asarray(pvalues, dtype=np.float64)
    if p.ndim != 1:
        p = np.squeeze(p)
        if p.ndim > 1:
            raise ValueError(f"p-values must be 1-D, got shape {np.shape(pvalues)}")
        p = p.reshape(-1)
    if p.size == 0:
        raise ValueError("no p-values supplied")
    if not np.all(np.isfinite(p)):
        bad = np.flatnonzero(~np.isfinite(p))
        raise ValueError(f"non-finite p-value at position {bad[0]}")
    if p.min() < 0.0 or p.max() > 1.0:
        bad = np.flatnonzero((p < 0.0) | (p > 1.0))
        raise ValueError(
            f"p-value out of [0, 1] at position {bad[0]}: {p[bad[0]]!r}"
        )
    return p


def check_covariates(covariates, n_rows: int) -> np.ndarray:
    """Coerce to a 2-D float64 matrix with one row per hypothesis."""
    x = np.asarray(covariates, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise ValueError(f"covariates must be 1-D or 2-D, got ndim={x.ndim}")
    if x.shape[0] != n_rows:
        raise ValueError(
            f"covariate rows ({x.shape[0]}) do not match p-values ({n_rows})"
        )
    if not np.all(np.isfinite(x)):
        bad = np.argwhere(~np.isfinite(x))[0]
        raise ValueError(f"non-finite covariate at row {bad[0]}, column {bad[1]}")
    return x


def add_intercept(x: np.ndarray) -> np.ndarray:
    """Prepend a constant column of ones."""
    return np.hstack([np.ones((x.shape[0], 1)), x])


def robust_standardize(x: np.ndarray) -> np.ndarray:
    """Center columns at the median and scale by a robust spread.

    The spread is IQR / 1.349, which matches the standard deviation for
    normal data; columns with zero spread are left unscaled.
    """
    med = np.median(x, axis=0)
    q75, q25 = np.percentile(x, [75.0, 25.0], axis=0)
    scale = (q75 - q25) / 1.349
    scale = np.where(scale > 0.0, scale, 1.0)
    return (x - med) / scale


def check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha!r}")
    return alpha


def check_gamma(gamma: float) -> float:
    gamma = float(gamma)
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"censoring point must be in (0, 1), got {gamma!r}")
    return gamma
