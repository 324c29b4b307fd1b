"""Thresholding, the budget identity, and the weighted-Bonferroni view."""

import warnings

import numpy as np
import pytest

from adafwer.core import counter_rng
from adafwer.decide import (
    DecisionSet,
    EpsilonBundle,
    bonferroni_weights,
    compute_tau,
    decisions_from_fit,
    thresholds_and_reject,
    winsorize_pi,
)

SQRT10 = np.sqrt(10.0)


def test_epsilon_bundle_validation():
    EpsilonBundle(0.0, 1.0, 0.0)  # boundary values allowed
    with pytest.raises(ValueError):
        EpsilonBundle(eps1=0.5, eps2=0.4)
    with pytest.raises(ValueError):
        EpsilonBundle(epsilon=-1.0)


def test_winsorize_pi_clips():
    np.testing.assert_allclose(
        winsorize_pi(np.array([0.0, 0.5, 1.0])), [0.01, 0.5, 0.99]
    )
    with pytest.raises(ValueError):
        winsorize_pi(np.array([0.5]), 0.9, 0.1)


def test_single_exceedance_worked_chain():
    # pi = 0.5, k = 0.5, gamma = 0.5, alpha = 0.05, one p above gamma
    p = np.array([0.01, 0.9])
    pi = np.array([0.5, 0.5])
    ds = thresholds_and_reject(p, pi, gamma=0.5, k=0.5, alpha=0.05)
    assert ds.tau_tilde == pytest.approx(SQRT10, abs=1e-9)
    assert ds.tau_hat == ds.tau_tilde
    np.testing.assert_allclose(ds.thresholds, [0.025, 0.025], atol=1e-9)
    np.testing.assert_array_equal(ds.rejected, [True, False])
    assert ds.budget == pytest.approx(0.05, abs=1e-9)
    np.testing.assert_allclose(ds.weights, [0.5, 0.5], atol=1e-9)
    assert ds.n_rejected == 1


def test_compute_tau_matches_decision_chain():
    p = np.array([0.01, 0.9])
    pi = np.array([0.5, 0.5])
    tau_tilde, tau_hat = compute_tau(pi, p > 0.5, k=0.5, alpha=0.05, gamma=0.5)
    assert tau_tilde == pytest.approx(SQRT10, abs=1e-9)
    assert tau_hat == tau_tilde


def test_tau_floor_binds_and_budget_stays_below_alpha():
    p = np.array([0.01, 0.9])
    pi = np.array([0.5, 0.5])
    eps = EpsilonBundle(epsilon=10.0)  # above the closed-form tau
    ds = thresholds_and_reject(p, pi, gamma=0.5, k=0.5, alpha=0.05, eps=eps)
    assert ds.tau_hat == 10.0
    assert ds.tau_tilde == pytest.approx(SQRT10, abs=1e-9)
    assert ds.budget < 0.05


def test_all_censored_warns_and_caps_at_gamma():
    p = np.array([0.1, 0.2, 0.5])
    pi = np.full(3, 0.5)
    with pytest.warns(UserWarning, match="gamma"):
        ds = thresholds_and_reject(p, pi, gamma=0.5, k=0.5, alpha=0.05)
    np.testing.assert_array_equal(ds.thresholds, [0.5, 0.5, 0.5])
    assert ds.rejected.all()
    assert ds.tau_tilde == 0.0
    assert np.isinf(ds.weights).all()
    assert ds.budget == 0.0


def test_all_censored_weights_warn():
    with pytest.warns(UserWarning):
        w = bonferroni_weights(np.array([0.5]), np.array([False]), 0.5, 0.5)
    assert np.isinf(w).all()


def test_budget_identity_random_inputs():
    rng = counter_rng(55, 0)
    for trial in range(20):
        m = 200
        p = rng.random(m)
        pi = rng.uniform(0.02, 0.98, m)
        k = rng.uniform(0.05, 0.95)
        alpha = rng.uniform(0.01, 0.2)
        gamma = rng.uniform(0.3, 0.7)
        if not np.any(p > gamma):
            continue
        ds = thresholds_and_reject(p, pi, gamma=gamma, k=k, alpha=alpha)
        if ds.tau_hat == ds.tau_tilde:
            assert ds.budget == pytest.approx(alpha, rel=1e-9)


def test_weight_identity_without_stabilization():
    rng = counter_rng(56, 0)
    eps = EpsilonBundle(eps1=0.0, eps2=1.0, epsilon=0.0)
    for trial in range(20):
        m = 300
        p = rng.random(m)
        pi = rng.uniform(0.05, 0.95, m)
        k = rng.uniform(0.1, 0.9)
        alpha = rng.uniform(0.01, 0.2)
        if not np.any(p > 0.5):
            continue
        ds = thresholds_and_reject(p, pi, gamma=0.5, k=k, alpha=alpha, eps=eps)
        np.testing.assert_allclose(alpha * ds.weights, ds.thresholds, rtol=1e-10)


def test_winsorization_breaks_weight_identity_only_at_extremes():
    p = np.array([0.001, 0.9, 0.8])
    pi = np.array([0.001, 0.5, 0.5])  # first entry gets winsorized to 0.01
    ds = thresholds_and_reject(p, pi, gamma=0.5, k=0.5, alpha=0.05)
    # weights use raw pi, thresholds use the winsorized version
    assert not np.isclose(0.05 * ds.weights[0], ds.thresholds[0], rtol=1e-6)
    assert np.isclose(0.05 * ds.weights[1], ds.thresholds[1], rtol=1e-6)


def test_thresholds_decrease_with_null_probability():
    pi = np.array([0.1, 0.3, 0.5, 0.7, 0.9])
    p = np.array([0.9, 0.9, 0.9, 0.9, 0.9])
    ds = thresholds_and_reject(p, pi, gamma=0.5, k=0.5, alpha=0.05)
    assert np.all(np.diff(ds.thresholds) < 0)


def test_rejection_capped_at_gamma():
    # huge thresholds cannot reject beyond the censoring point
    p = np.array([0.6, 0.9])
    pi = np.array([0.01, 0.01])
    ds = thresholds_and_reject(p, pi, gamma=0.5, k=0.5, alpha=0.2)
    assert not ds.rejected[0] and not ds.rejected[1]
    np.testing.assert_array_equal(ds.effective_thresholds, np.minimum(ds.thresholds, 0.5))


def test_more_alpha_more_rejections():
    rng = counter_rng(57, 0)
    p = rng.random(500) ** 2.0  # signal-enriched
    pi = rng.uniform(0.2, 0.9, 500)
    n = []
    for alpha in (0.01, 0.05, 0.2):
        ds = thresholds_and_reject(p, pi, gamma=0.5, k=0.3, alpha=alpha)
        n.append(ds.n_rejected)
    assert n[0] <= n[1] <= n[2]


def test_decisions_from_fit_matches_direct_call():
    from adafwer.estimate import fit_mixture
    from adafwer.simulate import SimulationConfig, simulate

    study = simulate(SimulationConfig(m=2000, eta0=2.0, k_d=1.0, k_s=2.5, seed=58), 0)
    fit = fit_mixture(study.table, gamma=0.5)
    ds = decisions_from_fit(study.table, fit, alpha=0.05)
    direct = thresholds_and_reject(study.table.pvalues, fit.pi, fit.gamma, fit.k, 0.05)
    np.testing.assert_array_equal(ds.rejected, direct.rejected)
    np.testing.assert_array_equal(ds.thresholds, direct.thresholds)
