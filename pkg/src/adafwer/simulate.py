"""Synthetic studies: covariates, null indicators, correlated z-scores.

Each hypothesis gets a standard normal covariate x.  The chance of being
null is logistic in x with baseline log-odds eta0 and slope k_d, so k_d
controls how informative the covariate is.  Alternatives receive a mean
shift k_s on the z-scale (or a moment-matched shifted gamma draw), and the
noise can be independent, block-equicorrelated, sign-flipped within block
halves, or AR(1).  One-sided p-values are p = 1 - Phi(z).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from math import sqrt

import numpy as np
from scipy.signal import lfilter
from scipy.special import expit, ndtr

from .core import HypothesisTable, counter_rng

_SQRT2 = sqrt(2.0)

CORRELATIONS = ("independent", "block", "block_signed", "ar1")
ALTERNATIVES = ("normal", "shifted_gamma")

SETUPS = {
    "S0": dict(alternative="normal", correlation="independent"),
    "S1": dict(alternative="shifted_gamma", correlation="independent"),
    "S2.1": dict(alternative="normal", correlation="block"),
    "S2.2": dict(alternative="normal", correlation="block_signed"),
    "S2.3": dict(alternative="normal", correlation="ar1", phi=0.75),
    "S2.4": dict(alternative="normal", correlation="ar1", phi=-0.75),
}


@dataclass
class SimulationConfig:
    m: int = 10_000
    eta0: float = 2.5
    k_d: float = 0.0
    k_s: float = 2.0
    alternative: str = "normal"
    correlation: str = "independent"
    rho: float = 0.5
    phi: float = 0.75
    block_size: int = 20
    sub_size: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m!r}")
        if self.alternative not in ALTERNATIVES:
            raise ValueError(f"unknown alternative {self.alternative!r}")
        if self.correlation not in CORRELATIONS:
            raise ValueError(f"unknown correlation structure {self.correlation!r}")
        if self.correlation in ("block", "block_signed"):
            if self.m % self.block_size != 0:
                raise ValueError(
                    f"block size {self.block_size} does not divide m={self.m}"
                )
            if not 0.0 <= self.rho < 1.0:
                raise ValueError(f"rho must be in [0, 1), got {self.rho!r}")
        if self.correlation == "block_signed" and 2 * self.sub_size != self.block_size:
            raise ValueError("signed blocks need two equal sub-blocks")
        if self.correlation == "ar1" and not abs(self.phi) < 1.0:
            raise ValueError(f"AR(1) needs |phi| < 1, got {self.phi!r}")


def config_for_setup(name: str, **overrides) -> SimulationConfig:
    """Named configurations S0, S1, S2.1-S2.4 with field overrides."""
    if name not in SETUPS:
        raise ValueError(f"unknown setup {name!r}; choose from {sorted(SETUPS)}")
    base = dict(SETUPS[name])
    base.update(overrides)
    return SimulationConfig(**base)


@dataclass
class SimulatedStudy:
    table: HypothesisTable
    truth: np.ndarray        # 1 = alternative
    z: np.ndarray
    pi_true: np.ndarray
    covariate: np.ndarray

    @property
    def m(self) -> int:
        return self.truth.size


def _noise(config: SimulationConfig, rng: np.random.Generator) -> np.ndarray:
    m = config.m
    if config.correlation == "independent":
        return rng.standard_normal(m)
    if config.correlation in ("block", "block_signed"):
        n_blocks = m // config.block_size
        shared = np.repeat(rng.standard_normal(n_blocks), config.block_size)
        own = rng.standard_normal(m)
        loading = sqrt(config.rho)
        if config.correlation == "block_signed":
            sign = np.tile(
                np.repeat([1.0, -1.0], config.sub_size), n_blocks
            )
            shared = sign * shared
        return loading * shared + sqrt(1.0 - config.rho) * own
    # AR(1): e_1 = xi_1, e_i = phi e_{i-1} + sqrt(1-phi^2) xi_i
    xi = rng.standard_normal(m)
    drive = xi * sqrt(1.0 - config.phi ** 2)
    drive[0] = xi[0]
    return lfilter([1.0], [1.0, -config.phi], drive)


def simulate(config: SimulationConfig, stream: int = 0) -> SimulatedStudy:
    """Draw one study; (config.seed, stream) fixes every random draw.

    A non-finite eta0 gives the complete null (all hypotheses null).
    """
    rng = counter_rng(config.seed, stream)
    m = config.m
    x = rng.standard_normal(m)
    pi_true = expit(config.eta0 + config.k_d * x)
    truth = (rng.random(m) < 1.0 - pi_true).astype(np.int8)
    e = _noise(config, rng)
    if config.alternative == "normal":
        z = config.k_s * truth + e
    else:
        z = e.copy()
        alt = truth == 1
        n_alt = int(alt.sum())
        draws = rng.gamma(shape=2.0, scale=1.0 / _SQRT2, size=n_alt)
        z[alt] = (config.k_s - _SQRT2) + draws
    pvalues = ndtr(-z)
    table = HypothesisTable.from_raw(pvalues, x)
    return SimulatedStudy(table=table, truth=truth, z=z, pi_true=pi_true, covariate=x)


def target_correlation(config: SimulationConfig) -> np.ndarray:
    """Correlation matrix of the noise implied by the configuration."""
    m = config.m
    if config.correlation == "independent":
        return np.eye(m)
    if config.correlation == "ar1":
        idx = np.arange(m)
        return config.phi ** np.abs(idx[:, None] - idx[None, :])
    base = np.eye(m)
    bs = config.block_size
    for start in range(0, m, bs):
        sl = slice(start, start + bs)
        if config.correlation == "block":
            block = np.full((bs, bs), config.rho)
        else:
            sign = np.repeat([1.0, -1.0], config.sub_size)
            block = config.rho * np.outer(sign, sign)
        np.fill_diagonal(block, 1.0)
        base[sl, sl] = block
    return base


@dataclass
class CorrelationCheck:
    corr: np.ndarray
    target: np.ndarray
    max_abs_dev: float


def empirical_correlation_check(config: SimulationConfig, n_rep: int) -> CorrelationCheck:
    """Monte-Carlo estimate of corr(z_i, z_j) under the complete null.

    Intended for small m (at most 200); returns the estimated matrix, the
    target implied by the configuration, and their largest absolute gap.
    """
    if config.m > 200:
        raise ValueError("correlation check is meant for m <= 200")
    null_config = replace(config, eta0=float("inf"))
    draws = np.empty((n_rep, config.m))
    for r in range(n_rep):
        draws[r] = simulate(null_config, stream=r).z
    corr = np.corrcoef(draws, rowvar=False)
    target = target_correlation(config)
    return CorrelationCheck(
        corr=corr, target=target,
        max_abs_dev=float(np.abs(corr - target).max()),
    )
