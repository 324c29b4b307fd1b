"""Fitting the censored mixture: censoring-point selection, initial values, EM.

The pipeline is: pick the censoring point gamma by the bootstrap null
fraction criterion, form a starting point from the smallest p-values,
then run EM on the censoring indicators alone.  Each EM iteration does an
exact posterior step, a Newton/IRLS update of the logistic coefficients
with step halving, and a closed-form update of the alternative shape, so
the censored log-likelihood never decreases.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, log_expit, logit

from .core import (
    BETA_BOUND,
    CensoredData,
    HypothesisTable,
    MixtureFit,
    MixtureParams,
    bernoulli_terms,
    censored_loglik,
    counter_rng,
)


@dataclass
class EmOptions:
    tol: float = 1e-6
    max_iter: int = 200
    irls_max_iter: int = 25
    irls_tol: float = 1e-8
    k_min: float = 0.001
    k_max: float = 0.999
    beta_bound: float = BETA_BOUND
    n_boot: int = 100
    init_grid: int = 50
    init_max_points: int = 50_000
    fixed_k: float | None = None

    def __post_init__(self):
        if self.fixed_k is not None and not 0.0 < self.fixed_k < 1.0:
            raise ValueError(f"fixed shape must be in (0, 1), got {self.fixed_k!r}")


@dataclass
class InitEstimate:
    """Starting point for EM built from the small-p tail."""

    beta0: np.ndarray
    k0: float
    pi_small: float
    cutoff: float
    n_small: int
    degenerate: bool = False


def plugin_pi0(pvalues: np.ndarray, lam: float) -> float:
    """Exceedance-based null fraction estimate at one threshold.

    The exceedance count is floored at one so the estimate stays positive,
    and the result is capped at one.
    """
    m = pvalues.size
    count = max(int((pvalues > lam).sum()), 1)
    return min(count / (m * (1.0 - lam)), 1.0)


def storey_pi0_gamma(
    pvalues: np.ndarray,
    n_boot: int = 100,
    rng: np.random.Generator | None = None,
) -> tuple[float, float]:
    """Pick the censoring point by bootstrap over a threshold grid.

    Candidate thresholds run 0.05, 0.10, ..., 0.95.  For each, the null
    fraction estimate is the capped exceedance ratio.  Bootstrap resamples
    are scored by squared distance to the smallest estimate on the original
    grid, and the threshold with the lowest mean squared error wins (ties
    go to the smallest threshold).  Resampling draws cell counts for the
    grid intervals directly, which is equivalent to resampling the
    p-values and only counting exceedances.

    Returns (pi0, gamma).
    """
    if rng is None:
        rng = counter_rng(0, 0)
    m = pvalues.size
    lambdas = np.arange(1, 20) * 0.05
    sorted_p = np.sort(pvalues)
    # n_at_most[g] = #{p <= lambda_g}
    n_at_most = np.searchsorted(sorted_p, lambdas, side="right")
    exceed = m - n_at_most
    pi0_grid = np.minimum(np.maximum(exceed, 1) / (m * (1.0 - lambdas)), 1.0)
    pi0_min = pi0_grid.min()

    # counts for the cells [0, .05], (.05, .10], ..., (.95, 1]
    cells = np.diff(np.concatenate([[0], n_at_most, [m]]))
    boot_cells = rng.multinomial(m, cells / m, size=n_boot)
    boot_exceed = m - np.cumsum(boot_cells[:, :-1], axis=1)
    boot_pi0 = np.minimum(
        np.maximum(boot_exceed, 1) / (m * (1.0 - lambdas)), 1.0
    )
    mse = np.mean((boot_pi0 - pi0_min) ** 2, axis=0)
    best = int(np.argmin(mse))  # argmin takes the first index on ties
    return float(pi0_grid[best]), float(lambdas[best])


def _small_p_negloglik(theta, psmall, log_psmall, n_small, cutoff, weight):
    """Negative conditional log-likelihood of the sub-cutoff p-values."""
    pi, k = theta
    if not (0.0 < pi < 1.0 and 0.0 < k < 1.0):
        return np.inf
    dens = pi + (1.0 - pi) * k * np.exp((k - 1.0) * log_psmall)
    total = weight * np.log(dens).sum()
    norm = pi * cutoff + (1.0 - pi) * cutoff ** k
    return -(total - n_small * np.log(norm))


def small_p_init(
    pvalues: np.ndarray,
    pi_overall: float,
    n_coef: int = 1,
    opts: EmOptions | None = None,
) -> InitEstimate:
    """Initial (beta, k) from the p-values below a data-driven cutoff.

    The cutoff is the ceil(m * (1 - pi_overall))-th smallest p-value; when
    pi_overall is 1 the 0.01 quantile is used instead.  The intercept-only
    mixture weight and the shape are fit to the sub-cutoff sample by a
    coarse grid search followed by a Nelder-Mead polish on the conditional
    likelihood.  Slope coefficients start at zero.  With no usable
    sub-cutoff points the neutral start (beta = 0, k = 0.5) is returned
    with the degenerate flag set.
    """
    if opts is None:
        opts = EmOptions()
    m = pvalues.size
    sorted_p = np.sort(pvalues)
    if pi_overall >= 1.0:
        cutoff = float(np.quantile(sorted_p, 0.01))
    else:
        rank = int(np.ceil(m * (1.0 - pi_overall)))
        rank = min(max(rank, 1), m)
        cutoff = float(sorted_p[rank - 1])

    psmall = sorted_p[sorted_p < cutoff]
    n_small = psmall.size
    if n_small == 0:
        return InitEstimate(
            beta0=np.zeros(n_coef), k0=0.5, pi_small=0.5,
            cutoff=cutoff, n_small=0, degenerate=True,
        )

    # evenly spaced order statistics keep the subsample deterministic
    weight = 1.0
    if n_small > opts.init_max_points:
        idx = np.linspace(0, n_small - 1, opts.init_max_points).round().astype(int)
        weight = n_small / idx.size
        psmall = psmall[idx]
    log_psmall = np.log(np.clip(psmall, 1e-300, None))

    grid = np.linspace(0.01, 0.99, opts.init_grid)
    # alternative density at each grid shape, shared across the pi axis
    alt_dens = grid[:, None] * np.exp((grid[:, None] - 1.0) * log_psmall[None, :])
    best_val = np.inf
    best_theta = (0.5, 0.5)
    for pi in grid:
        totals = weight * np.log(pi + (1.0 - pi) * alt_dens).sum(axis=1)
        norms = pi * cutoff + (1.0 - pi) * cutoff ** grid
        vals = -(totals - n_small * np.log(norms))
        j = int(np.argmin(vals))
        if vals[j] < best_val:
            best_val = float(vals[j])
            best_theta = (float(pi), float(grid[j]))

    res = minimize(
        _small_p_negloglik,
        x0=np.array(best_theta),
        args=(psmall, log_psmall, n_small, cutoff, weight),
        method="Nelder-Mead",
        options={"xatol": 1e-6, "fatol": 1e-9, "maxiter": 400},
    )
    pi_tilde, k_tilde = best_theta
    if res.success and np.isfinite(res.fun) and res.fun <= best_val:
        pi_tilde, k_tilde = float(res.x[0]), float(res.x[1])
    pi_tilde = float(np.clip(pi_tilde, 1e-6, 1.0 - 1e-6))
    k_tilde = float(np.clip(k_tilde, opts.k_min, opts.k_max))

    beta0 = np.zeros(n_coef)
    beta0[0] = float(np.clip(logit(pi_tilde), -opts.beta_bound, opts.beta_bound))
    return InitEstimate(
        beta0=beta0, k0=k_tilde, pi_small=pi_tilde,
        cutoff=cutoff, n_small=n_small,
    )


def e_step(pi: np.ndarray, b0: np.ndarray, b1: np.ndarray) -> np.ndarray:
    """Posterior probability of the null given the censoring indicator."""
    num = pi * b0
    return num / (num + (1.0 - pi) * b1)


def m_step_k(
    q: np.ndarray, y: np.ndarray, gamma: float,
    k_min: float = 0.001, k_max: float = 0.999,
) -> float | None:
    """Exact maximizer of the expected log-likelihood in the shape.

    With A = sum (1-Q) y and B = sum (1-Q)(1-y), the stationary point
    solves gamma**k = B / (A + B).  A = 0 pushes the shape to the lower
    clip, B = 0 to the upper clip.  Returns None when A + B = 0 (no
    posterior mass on the alternative), meaning keep the current shape.
    """
    one_minus_q = 1.0 - q
    a = float(one_minus_q[y].sum()) if y.dtype == bool else float((one_minus_q * y).sum())
    b = float(one_minus_q.sum()) - a
    if a + b <= 0.0:
        return None
    if b <= 0.0:
        return k_max
    if a <= 0.0:
        return k_min
    k = np.log(b / (a + b)) / np.log(gamma)
    return float(np.clip(k, k_min, k_max))


@dataclass
class IrlsResult:
    beta: np.ndarray
    pi: np.ndarray
    n_iter: int
    grad_norm: float
    converged: bool


def _weighted_gram(design: np.ndarray, w: np.ndarray, chunk: int = 2_000_000) -> np.ndarray:
    """design.T @ diag(w) @ design without materializing design * w at scale."""
    m = design.shape[0]
    if m <= chunk:
        return (design * w[:, None]).T @ design
    out = np.zeros((design.shape[1], design.shape[1]))
    for start in range(0, m, chunk):
        part = design[start:start + chunk]
        out += (part * w[start:start + chunk, None]).T @ part
    return out


def _projected_grad_norm(grad, beta, bound):
    """Gradient norm with components pointing out of the box zeroed."""
    g = grad.copy()
    at_hi = (beta >= bound) & (g > 0)
    at_lo = (beta <= -bound) & (g < 0)
    g[at_hi | at_lo] = 0.0
    return float(np.abs(g).max())


def m_step_beta(
    design: np.ndarray,
    q: np.ndarray,
    beta0: np.ndarray,
    opts: EmOptions | None = None,
) -> IrlsResult:
    """Box-constrained Newton/IRLS for the weighted logistic objective.

    Maximizes sum Q log pi + (1-Q) log(1-pi) with pi = expit(design @ beta)
    over the box |beta_j| <= beta_bound.  Each Newton direction is step
    halved until the objective does not decrease; candidates are clipped
    into the box before evaluation.  Tiny steps near the optimum are taken
    without a line search since the objective change is below rounding.
    """
    if opts is None:
        opts = EmOptions()
    bound = opts.beta_bound
    beta = np.clip(np.asarray(beta0, dtype=np.float64).copy(), -bound, bound)
    t = design @ beta
    f0 = float(q @ log_expit(t) + (1.0 - q) @ log_expit(-t))
    pi = expit(t)
    n_iter = 0
    converged = False
    grad = design.T @ (q - pi)
    for n_iter in range(1, opts.irls_max_iter + 1):
        gnorm = _projected_grad_norm(grad, beta, bound)
        if gnorm <= opts.irls_tol:
            converged = True
            break
        w = np.maximum(pi * (1.0 - pi), 1e-12)
        hess = _weighted_gram(design, w)
        hess[np.diag_indices_from(hess)] += 1e-10
        try:
            delta = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            delta, *_ = np.linalg.lstsq(hess, grad, rcond=None)
        if float(np.abs(delta).max()) <= 1e-9 * (1.0 + float(np.abs(beta).max())):
            # below the resolution of the objective; take it as is
            beta = np.clip(beta + delta, -bound, bound)
            t = design @ beta
            pi = expit(t)
            f0 = float(q @ log_expit(t) + (1.0 - q) @ log_expit(-t))
            grad = design.T @ (q - pi)
            continue
        step = 1.0
        accepted = False
        for _ in range(30):
            cand = np.clip(beta + step * delta, -bound, bound)
            tc = design @ cand
            fc = float(q @ log_expit(tc) + (1.0 - q) @ log_expit(-tc))
            if fc >= f0:
                beta, t, f0 = cand, tc, fc
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        pi = expit(t)
        grad = design.T @ (q - pi)
    gnorm = _projected_grad_norm(grad, beta, bound)
    if gnorm <= opts.irls_tol:
        converged = True
    return IrlsResult(beta=beta, pi=pi, n_iter=n_iter, grad_norm=gnorm, converged=converged)


def fit_em(
    table: HypothesisTable,
    cens: CensoredData,
    init: MixtureParams,
    opts: EmOptions | None = None,
    pi_smooth: float = float("nan"),
    init_estimate: InitEstimate | None = None,
) -> MixtureFit:
    """EM on the censoring indicators from a given starting point.

    Stops when the relative log-likelihood change drops below tol or after
    max_iter sweeps.  The trace of log-likelihood values (one per sweep,
    evaluated at the updated parameters) is returned for inspection.
    """
    if opts is None:
        opts = EmOptions()
    y = cens.y
    gamma = cens.gamma
    design = table.design
    beta = np.clip(np.asarray(init.beta, dtype=np.float64).copy(),
                   -opts.beta_bound, opts.beta_bound)
    if opts.fixed_k is not None:
        k = float(opts.fixed_k)
    else:
        k = float(np.clip(init.k, opts.k_min, opts.k_max))

    pi = expit(design @ beta)
    b0, b1 = bernoulli_terms(y, gamma, k)
    loglik = censored_loglik(pi, b0, b1)
    trace = [loglik]
    converged = False
    n_iter = 0
    q = e_step(pi, b0, b1)
    for n_iter in range(1, opts.max_iter + 1):
        res = m_step_beta(design, q, beta, opts)
        beta, pi = res.beta, res.pi
        if opts.fixed_k is None:
            k_new = m_step_k(q, y, gamma, opts.k_min, opts.k_max)
            if k_new is not None:
                k = k_new
        b0, b1 = bernoulli_terms(y, gamma, k)
        new_loglik = censored_loglik(pi, b0, b1)
        trace.append(new_loglik)
        q = e_step(pi, b0, b1)
        denom = max(abs(new_loglik), 1e-300)
        if abs(new_loglik - loglik) / denom < opts.tol:
            loglik = new_loglik
            converged = True
            break
        loglik = new_loglik

    degenerate = bool(init_estimate.degenerate) if init_estimate is not None else False
    return MixtureFit(
        params=MixtureParams(beta=beta, k=k),
        pi=pi,
        posterior_null=q,
        loglik_trace=np.asarray(trace),
        n_iter=n_iter,
        converged=converged,
        gamma=gamma,
        pi_smooth=pi_smooth,
        degenerate=degenerate,
        init=init_estimate,
    )


def fit_em_multistart(
    table: HypothesisTable,
    cens: CensoredData,
    init: InitEstimate,
    opts: EmOptions | None = None,
    pi_smooth: float = float("nan"),
) -> MixtureFit:
    """EM from the small-p start plus an overall-fraction fallback start.

    The small-p conditional likelihood is nearly flat in the mixture
    weight and can return a boundary estimate near 0; an EM started there
    settles into an everything-is-alternative stationary point.  Running a
    second start with the intercept at the logit of the overall null
    fraction and keeping the higher censored log-likelihood makes the
    pipeline robust to that collapse.

    When the leader by log-likelihood stopped at the iteration cap but a
    converged run sits within the stopping rule's own resolution of it,
    the converged run is returned instead: both found the same optimum
    and only one carries the certificate.  Distinct optima (the collapse
    case) are separated by log-likelihood gaps orders of magnitude wider
    than this margin.
    """
    if opts is None:
        opts = EmOptions()
    starts = [MixtureParams(beta=init.beta0, k=init.k0)]
    if np.isfinite(pi_smooth):
        pi_ref = float(np.clip(pi_smooth, 1e-6, 1.0 - 1e-6))
        beta_ref = np.zeros(table.n_coef)
        beta_ref[0] = float(np.clip(logit(pi_ref), -opts.beta_bound, opts.beta_bound))
        if abs(beta_ref[0] - init.beta0[0]) > 0.5:
            starts.append(MixtureParams(beta=beta_ref, k=init.k0))
    best = None
    best_conv = None
    for start in starts:
        fit = fit_em(table, cens, start, opts, pi_smooth=pi_smooth, init_estimate=init)
        if best is None or fit.loglik_trace[-1] > best.loglik_trace[-1]:
            best = fit
        if fit.converged and (best_conv is None
                              or fit.loglik_trace[-1] > best_conv.loglik_trace[-1]):
            best_conv = fit
    if best_conv is not None and not best.converged:
        lead = best.loglik_trace[-1] - best_conv.loglik_trace[-1]
        if lead < 10.0 * opts.tol * max(1.0, abs(best_conv.loglik_trace[-1])):
            return best_conv
    return best


def fit_mixture(
    table: HypothesisTable,
    gamma: float | str = "auto",
    opts: EmOptions | None = None,
    rng: np.random.Generator | None = None,
) -> MixtureFit:
    """Full fitting pipeline: censoring point, initial values, EM."""
    if opts is None:
        opts = EmOptions()
    if rng is None:
        rng = counter_rng(0, 0)
    if isinstance(gamma, str):
        if gamma != "auto":
            raise ValueError(f"gamma must be a float or 'auto', got {gamma!r}")
        pi_smooth, gamma_val = storey_pi0_gamma(table.pvalues, opts.n_boot, rng)
    else:
        gamma_val = float(gamma)
        if not 0.0 < gamma_val < 1.0:
            raise ValueError(f"gamma must be in (0, 1), got {gamma_val!r}")
        pi_smooth = plugin_pi0(table.pvalues, gamma_val)
    init = small_p_init(table.pvalues, pi_smooth, table.n_coef, opts)
    cens = CensoredData(y=table.pvalues > gamma_val, gamma=gamma_val)
    return fit_em_multistart(table, cens, init, opts, pi_smooth=pi_smooth)
