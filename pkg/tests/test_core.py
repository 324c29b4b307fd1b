"""Shared types and censored mixture likelihood pieces."""

import numpy as np
import pytest

from adafwer.core import (
    CensoredData,
    HypothesisTable,
    MixtureParams,
    bernoulli_terms,
    censor,
    censored_loglik,
    counter_rng,
    logistic_prob,
    loglik_at,
)


def test_counter_rng_reproducible_and_stream_separated():
    a = counter_rng(42, 0).standard_normal(5)
    b = counter_rng(42, 0).standard_normal(5)
    c = counter_rng(42, 1).standard_normal(5)
    d = counter_rng(43, 0).standard_normal(5)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)


def test_table_from_raw_adds_intercept():
    t = HypothesisTable.from_raw([0.1, 0.9], [[1.0], [2.0]])
    assert t.m == 2
    assert t.n_coef == 2
    np.testing.assert_array_equal(t.design[:, 0], [1.0, 1.0])
    np.testing.assert_array_equal(t.design[:, 1], [1.0, 2.0])


def test_table_without_covariates_is_intercept_only():
    t = HypothesisTable.from_raw([0.1, 0.9])
    assert t.design.shape == (2, 1)


def test_table_rejects_bad_pvalues():
    with pytest.raises(ValueError):
        HypothesisTable.from_raw([0.1, 1.5])
    with pytest.raises(ValueError):
        HypothesisTable.from_raw([0.1, np.nan])
    with pytest.raises(ValueError):
        HypothesisTable.from_raw([])


def test_table_rejects_mismatched_covariates():
    with pytest.raises(ValueError):
        HypothesisTable.from_raw([0.1, 0.9], [[1.0]])


def test_censor_is_strict():
    y = censor(np.array([0.4, 0.5, 0.6]), 0.5)
    np.testing.assert_array_equal(y, [False, False, True])


def test_censored_data_counts_exceedances():
    cens = CensoredData(y=np.array([True, False, True]), gamma=0.5)
    assert cens.n_exceed == 2


def test_bernoulli_terms_values():
    y = np.array([True, False])
    b0, b1 = bernoulli_terms(y, 0.5, 0.5)
    root_half = np.sqrt(0.5)
    np.testing.assert_allclose(b0, [0.5, 0.5], rtol=0, atol=1e-15)
    np.testing.assert_allclose(b1, [1.0 - root_half, root_half], rtol=0, atol=1e-15)


def test_censored_loglik_hand_values():
    # pi = gamma = k = 0.5, evaluated term by term
    pi = np.array([0.5])
    b0, b1 = bernoulli_terms(np.array([True]), 0.5, 0.5)
    assert censored_loglik(pi, b0, b1) == pytest.approx(-0.9252139016859078, abs=1e-12)
    b0, b1 = bernoulli_terms(np.array([False]), 0.5, 0.5)
    assert censored_loglik(pi, b0, b1) == pytest.approx(-0.5049207741003476, abs=1e-12)


def test_loglik_at_sums_terms():
    table = HypothesisTable.from_raw([0.6, 0.2], np.zeros((2, 1)))
    cens = CensoredData(y=censor(table.pvalues, 0.5), gamma=0.5)
    params = MixtureParams(beta=np.array([0.0, 0.0]), k=0.5)
    total = loglik_at(table, cens, params)
    assert total == pytest.approx(-0.9252139016859078 - 0.5049207741003476, abs=1e-12)


def test_logistic_prob_matches_direct_formula():
    rng = counter_rng(1, 0)
    design = np.hstack([np.ones((20, 1)), rng.standard_normal((20, 2))])
    beta = np.array([0.3, -1.2, 0.7])
    pi = logistic_prob(design, beta)
    np.testing.assert_allclose(pi, 1.0 / (1.0 + np.exp(-design @ beta)), rtol=1e-12)
