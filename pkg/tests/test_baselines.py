"""Classical procedures and the known-model oracle."""

import numpy as np
import pytest
from scipy.special import ndtr

from adafwer.baselines import (
    AlternativeSpec,
    bonferroni,
    f1_density,
    f1_inverse,
    holm,
    oracle_reject,
    weighted_bonferroni,
)
from adafwer.core import counter_rng

E_SQUARED = 7.38905609893065


def test_spec_validation():
    AlternativeSpec("beta", k=0.3)
    AlternativeSpec("normal_shift", shift=2.0)
    AlternativeSpec("shifted_gamma", shift=2.0)
    with pytest.raises(ValueError):
        AlternativeSpec("beta", k=1.5)
    with pytest.raises(ValueError):
        AlternativeSpec("normal_shift", shift=-1.0)
    with pytest.raises(ValueError):
        AlternativeSpec("cauchy", shift=1.0)


def test_shifted_gamma_delta_moment_match():
    spec = AlternativeSpec("shifted_gamma", shift=3.0)
    # mean of delta + Gamma(2, 1/sqrt(2)) is delta + sqrt(2) = shift
    assert spec.delta + np.sqrt(2.0) == pytest.approx(3.0)


# ------------------------------------------------------------------ densities

def test_beta_density_hand_value():
    spec = AlternativeSpec("beta", k=0.5)
    assert f1_density(spec, 0.25) == pytest.approx(1.0, abs=1e-12)


def test_normal_shift_density_hand_value():
    # at p with upper quantile z = 2 and shift 2 the ratio is e^2
    spec = AlternativeSpec("normal_shift", shift=2.0)
    p = float(ndtr(-2.0))
    assert p == pytest.approx(0.022750131948179195, abs=1e-15)
    assert f1_density(spec, p) == pytest.approx(E_SQUARED, rel=1e-10)


def test_density_integrates_to_one():
    from scipy.integrate import quad

    for spec in (
        AlternativeSpec("beta", k=0.4),
        AlternativeSpec("normal_shift", shift=1.5),
        AlternativeSpec("shifted_gamma", shift=2.0),
    ):
        total, err = quad(lambda p: f1_density(spec, p), 1e-12, 1.0, limit=200)
        # the shifted gamma keeps ~1e-3 mass below the cutoff
        assert total == pytest.approx(1.0, abs=2e-3)


def test_density_rejects_out_of_domain():
    spec = AlternativeSpec("beta", k=0.5)
    with pytest.raises(ValueError):
        f1_density(spec, 0.0)
    with pytest.raises(ValueError):
        f1_density(spec, 1.5)


# ------------------------------------------------------------------ inverses

@pytest.mark.parametrize("spec", [
    AlternativeSpec("beta", k=0.3),
    AlternativeSpec("beta", k=0.8),
    AlternativeSpec("normal_shift", shift=0.5),
    AlternativeSpec("normal_shift", shift=3.0),
    AlternativeSpec("shifted_gamma", shift=1.5),
    AlternativeSpec("shifted_gamma", shift=3.0),
])
def test_inverse_round_trip(spec):
    # the shifted-gamma density is zero past 1 - Phi(delta); stay inside
    hi = 0.9
    if spec.family == "shifted_gamma":
        hi = 0.9 * float(1.0 - ndtr(spec.delta))
    p = np.geomspace(1e-6, hi, 40)
    v = f1_density(spec, p)
    back = f1_inverse(spec, v)
    np.testing.assert_allclose(back, p, rtol=1e-8, atol=1e-12)


def test_inverse_caps_at_one():
    spec = AlternativeSpec("beta", k=0.5)
    # density at p=1 is k; anything at or below maps to 1
    assert f1_inverse(spec, 0.25) == 1.0


def test_inverse_invalid_inputs():
    spec = AlternativeSpec("normal_shift", shift=0.0)
    with pytest.raises(ValueError):
        f1_inverse(spec, 1.0)  # constant density
    spec = AlternativeSpec("shifted_gamma", shift=0.5)
    with pytest.raises(ValueError):
        f1_inverse(spec, 1.0)  # non-monotone regime
    spec = AlternativeSpec("beta", k=0.5)
    with pytest.raises(ValueError):
        f1_inverse(spec, 0.0)


# ------------------------------------------------------------------ oracle

def test_oracle_two_point_hand_values():
    # pi = 0.5 everywhere, beta shape 0.5, alpha = 0.1:
    # tau* = sqrt(10)/2 and both thresholds equal 0.1
    spec = AlternativeSpec("beta", k=0.5)
    ds = oracle_reject(np.array([0.05, 0.5]), np.array([0.5, 0.5]), spec, alpha=0.1)
    assert ds.tau_hat == pytest.approx(1.5811388300841898, rel=1e-10)
    np.testing.assert_allclose(ds.thresholds, [0.1, 0.1], rtol=1e-10)
    np.testing.assert_array_equal(ds.rejected, [True, False])
    assert ds.budget == pytest.approx(0.1, rel=1e-9)


def test_oracle_budget_never_exceeds_alpha():
    rng = counter_rng(61, 0)
    spec = AlternativeSpec("normal_shift", shift=2.0)
    for _ in range(10):
        m = 100
        p = rng.random(m)
        pi = rng.uniform(0.2, 0.95, m)
        alpha = rng.uniform(0.01, 0.3)
        ds = oracle_reject(p, pi, spec, alpha)
        assert ds.budget <= alpha + 1e-9


def test_oracle_cap_saturates_with_large_alpha():
    spec = AlternativeSpec("beta", k=0.5)
    pi = np.full(5, 0.1)
    ds = oracle_reject(np.linspace(0.1, 0.9, 5), pi, spec, alpha=0.9)
    # budget maxes out at sum(pi) = 0.5 < alpha, so all thresholds hit 1
    np.testing.assert_allclose(ds.thresholds, 1.0)
    assert ds.rejected.all()
    assert ds.budget == pytest.approx(0.5, rel=1e-12)


def test_oracle_rejects_degenerate_pi():
    spec = AlternativeSpec("beta", k=0.5)
    with pytest.raises(ValueError):
        oracle_reject(np.array([0.5]), np.array([0.0]), spec, 0.05)
    with pytest.raises(ValueError):
        oracle_reject(np.array([0.5]), np.array([1.0]), spec, 0.05)


def test_oracle_monotone_in_pi():
    # safer bets (lower null probability) get larger thresholds
    spec = AlternativeSpec("normal_shift", shift=2.5)
    pi = np.array([0.2, 0.4, 0.6, 0.8])
    ds = oracle_reject(np.full(4, 0.5), pi, spec, alpha=0.05)
    assert np.all(np.diff(ds.thresholds) <= 1e-15)


# ------------------------------------------------------------------ classics

def test_bonferroni_boundary_inclusive():
    p = np.array([0.0125, 0.013, 0.9, 0.9])
    rej = bonferroni(p, alpha=0.05)
    np.testing.assert_array_equal(rej, [True, False, False, False])


def test_holm_hand_case():
    p = np.array([0.01, 0.04, 0.03, 0.005])
    rej = holm(p, alpha=0.05)
    # sorted: 0.005 <= 0.0125, 0.01 <= 0.0167, 0.03 > 0.025 stop
    np.testing.assert_array_equal(rej, [True, False, False, True])


def test_holm_all_and_none():
    assert holm(np.full(4, 1e-6), 0.05).all()
    assert not holm(np.full(4, 0.9), 0.05).any()


def test_holm_dominates_bonferroni():
    rng = counter_rng(62, 0)
    for _ in range(20):
        p = rng.random(100) ** 3
        b = bonferroni(p, 0.05)
        h = holm(p, 0.05)
        assert np.all(h[b])  # every Bonferroni rejection survives Holm


def test_weighted_bonferroni_strict_inequality():
    # threshold is alpha / (m * pi); equality must NOT reject
    p = np.array([0.025, 0.0249, 0.9, 0.9])
    pi = np.full(4, 0.5)
    rej = weighted_bonferroni(p, pi, alpha=0.05)
    np.testing.assert_array_equal(rej, [False, True, False, False])


def test_weighted_bonferroni_favors_low_pi():
    # cutoffs alpha / (m pi): 0.01/(2*0.1) = 0.05 and 0.01/2 = 0.005
    p = np.array([0.01, 0.01])
    rej = weighted_bonferroni(p, np.array([0.1, 1.0]), alpha=0.01)
    np.testing.assert_array_equal(rej, [True, False])


def test_weighted_bonferroni_validates_pi():
    with pytest.raises(ValueError):
        weighted_bonferroni(np.array([0.5]), np.array([0.0]), 0.05)
    with pytest.raises(ValueError):
        weighted_bonferroni(np.array([0.5]), np.array([1.2]), 0.05)
