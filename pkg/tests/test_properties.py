"""Property-based checks for the fast, purely numeric pieces."""

import numpy as np
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from adafwer.baselines import bonferroni, holm
from adafwer.decide import thresholds_and_reject, winsorize_pi
from adafwer.estimate import m_step_k, storey_pi0_gamma
from adafwer.evaluate import wilson_interval
from adafwer.core import counter_rng

pvec = arrays(np.float64, st.integers(2, 80),
              elements=st.floats(0.0, 1.0, allow_nan=False))


@given(pvec, st.floats(0.005, 0.3))
def test_holm_rejects_superset_of_bonferroni(p, alpha):
    b = bonferroni(p, alpha)
    h = holm(p, alpha)
    assert np.all(h[b])


@given(pvec)
def test_winsorize_bounds_and_idempotence(p):
    w = winsorize_pi(p)
    assert w.min() >= 0.01 and w.max() <= 0.99
    np.testing.assert_array_equal(winsorize_pi(w), w)


@settings(max_examples=40)
@given(st.integers(0, 10_000), st.floats(0.05, 0.95), st.floats(0.05, 0.95),
       st.floats(0.01, 0.3), st.floats(0.3, 0.7))
def test_budget_matches_alpha_when_unfloored(seed, pi_lo, pi_hi, alpha, gamma):
    rng = counter_rng(seed, 0)
    m = 50
    p = rng.random(m)
    if not np.any(p > gamma):
        return
    pi = rng.uniform(min(pi_lo, pi_hi), max(pi_lo, pi_hi) + 1e-3, m)
    k = rng.uniform(0.1, 0.9)
    ds = thresholds_and_reject(p, np.clip(pi, 0.01, 0.99), gamma, k, alpha)
    if ds.tau_hat == ds.tau_tilde:
        assert abs(ds.budget - alpha) <= 1e-9 * alpha


@given(st.integers(0, 500), st.integers(1, 500))
def test_wilson_interval_contains_point_estimate(successes, n):
    successes = min(successes, n)
    lo, hi = wilson_interval(successes, n)
    assert 0.0 <= lo <= successes / n <= hi <= 1.0


@settings(max_examples=40)
@given(st.integers(0, 10_000), st.floats(0.1, 0.9))
def test_k_step_stays_in_range(seed, gamma):
    rng = counter_rng(seed, 1)
    q = rng.random(30)
    y = rng.random(30) < 0.5
    k = m_step_k(q, y, gamma)
    if k is not None:
        assert 0.001 <= k <= 0.999


@settings(max_examples=25)
@given(st.integers(0, 10_000))
def test_storey_output_ranges(seed):
    rng = counter_rng(seed, 2)
    p = rng.random(300)
    pi0, gamma = storey_pi0_gamma(p, n_boot=30, rng=counter_rng(seed, 3))
    assert 0.0 < pi0 <= 1.0
    assert any(np.isclose(gamma, g) for g in np.arange(1, 20) * 0.05)
