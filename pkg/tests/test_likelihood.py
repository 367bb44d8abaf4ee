#!/usr/bin/env python3
"""
Test cases for pool probabilities and the observed-data log-likelihood.
"""

import sys
from pathlib import Path

import numpy as np
import pytest
from scipy.special import expit, logit

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent / 'src'))

from poolselect.model.dataset import Coefficients, Dataset, SubmodelCoefficients
from poolselect.model.likelihood import (
    aic_bic,
    logistic_mean,
    logistic_means,
    observed_loglik,
    penalized_observed_objective,
    pool_negative_prob,
    pool_negative_probs,
)


def _pooled(rng, n=12, p=3, size=3, se=0.9, sp=0.95):
    X = rng.standard_normal((n, p))
    pools = tuple(np.arange(s, min(s + size, n)) for s in range(0, n, size))
    z = rng.integers(0, 2, len(pools))
    return Dataset(X, pools, z, se, sp)


@pytest.mark.unit
class TestPoolProbabilities:

    def test_logistic_mean_matches_expit(self):
        theta = Coefficients(-1.0, [0.5, 2.0])
        assert logistic_mean(theta, [1.0, -0.25]) == pytest.approx(expit(-1.0 + 0.5 - 0.5))

    def test_means_are_clamped(self):
        theta = Coefficients(0.0, [1000.0])
        pi = logistic_means(theta, np.array([[1.0], [-1.0]]))
        assert 0.0 < pi.min() and pi.max() < 1.0

    def test_perfect_assay_negative_prob_is_product(self, rng):
        data = _pooled(rng, se=1.0, sp=1.0)
        theta = Coefficients(-0.5, [0.3, -0.2, 0.1])
        pi = logistic_means(theta, data.X)
        for j, pool in enumerate(data.pools):
            assert pool_negative_prob(theta, data, j) == pytest.approx(np.prod(1.0 - pi[pool]), rel=1e-12)

    def test_scalar_and_vector_forms_agree(self, rng):
        data = _pooled(rng, n=17, size=4)
        theta = Coefficients(-1.0, [0.4, 0.0, -1.2])
        vector = pool_negative_probs(theta, data)
        scalar = [pool_negative_prob(theta, data, j) for j in range(data.n_pools)]
        np.testing.assert_allclose(vector, scalar, rtol=1e-12)

    def test_negative_prob_bounds(self, rng):
        data = _pooled(rng, se=0.9, sp=0.95)
        theta = Coefficients(5.0, [3.0, 3.0, 3.0])
        probs = pool_negative_probs(theta, data)
        assert np.all(probs >= 1.0 - 0.9 - 1e-12)
        assert np.all(probs <= 0.95 + 1e-12)

    def test_pool_index_out_of_range(self, rng):
        data = _pooled(rng)
        with pytest.raises(IndexError):
            pool_negative_prob(Coefficients.zeros(3), data, data.n_pools)
        with pytest.raises(IndexError):
            pool_negative_prob(Coefficients.zeros(3), data, -1)

    def test_single_individual_negative_prob(self):
        data = Dataset.individual(np.zeros((1, 1)), [0], 0.95, 0.97)
        theta = Coefficients(logit(0.2), [0.0])
        assert pool_negative_prob(theta, data, 0) == pytest.approx(0.05 * 0.2 + 0.97 * 0.8, rel=1e-12)
        assert pool_negative_prob(theta, data, 0) == pytest.approx(0.786, rel=1e-12)


@pytest.mark.unit
class TestObservedLoglik:

    def test_individual_testing_is_misclassified_bernoulli(self, rng):
        X = rng.standard_normal((30, 2))
        z = rng.integers(0, 2, 30)
        se, sp = 0.92, 0.97
        data = Dataset.individual(X, z, se, sp)
        theta = Coefficients(0.3, [-0.5, 1.0])
        pi = expit(0.3 + X @ theta.beta)
        positive = se * pi + (1.0 - sp) * (1.0 - pi)
        expected = np.sum(z * np.log(positive) + (1 - z) * np.log(1.0 - positive))
        assert observed_loglik(theta, data) == pytest.approx(expected, rel=1e-12)

    def test_penalized_objective_subtracts_l1(self, rng):
        data = _pooled(rng)
        theta = Coefficients(0.1, [1.0, -2.0, 0.0])
        assert penalized_observed_objective(theta, data, 0.5) == pytest.approx(
            observed_loglik(theta, data) - 1.5)

    def test_aic_bic_count_intercept(self, rng):
        data = _pooled(rng, n=20, size=2)
        theta = Coefficients(-0.2, [0.7, 0.0, -0.4])
        sub = theta.restrict(theta.support())
        aic, bic = aic_bic(sub, data)
        loglik = observed_loglik(theta, data)
        assert aic == pytest.approx(-2 * loglik + 2 * 3)
        assert bic == pytest.approx(-2 * loglik + np.log(20) * 3)

    def test_aic_bic_at_known_loglik(self, monkeypatch):
        monkeypatch.setattr('poolselect.model.likelihood.observed_loglik', lambda theta, data: -500.0)
        data = Dataset.individual(np.zeros((1000, 3)), np.zeros(1000, dtype=int), 0.95, 0.97)
        aic, bic = aic_bic(SubmodelCoefficients((0, 1, 2), -1.0, [0.5, 0.5, 0.5]), data)
        assert aic == pytest.approx(1008.0)
        assert bic == pytest.approx(1027.63, abs=5e-3)
