#!/usr/bin/env python3
"""
Test cases for the Louis and sandwich information estimators.

The decisive check compares the Louis observed information with a central
finite-difference Hessian of the observed log-likelihood.
"""

import sys
from pathlib import Path

import numpy as np
import pytest
from scipy.special import logit

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent / 'src'))

from poolselect.fitting.em import em_fit
from poolselect.inference.information import (
    complete_data_information,
    conditional_cross_moments,
    louis_information,
    sandwich_covariance,
    submodel_design,
)
from poolselect.model.dataset import Coefficients, Dataset, SubmodelCoefficients
from poolselect.model.likelihood import observed_loglik
from poolselect.study.dgp import DgpConfig, simulate_dataset


def central_hessian(func, base):
    """Central-difference Hessian of ``func`` with step 1e-5 * (1 + |x_j|) per coordinate."""
    base = np.asarray(base, dtype=float)
    k = base.size
    steps = 1e-5 * (1.0 + np.abs(base))
    hessian = np.zeros((k, k))
    for a in range(k):
        for b in range(a, k):
            ea = np.zeros(k)
            eb = np.zeros(k)
            ea[a] = steps[a]
            eb[b] = steps[b]
            value = (func(base + ea + eb) - func(base + ea - eb)
                     - func(base - ea + eb) + func(base - ea - eb)) / (4 * steps[a] * steps[b])
            hessian[a, b] = hessian[b, a] = value
    return hessian


def numerical_information(theta_M, data):
    """Negative central-difference Hessian of the observed log-likelihood over (alpha, beta_M)."""

    def loglik(vector):
        return observed_loglik(SubmodelCoefficients.from_vector(theta_M.model, vector).expand(data.p), data)

    return -central_hessian(loglik, theta_M.as_vector())


def random_instance(seed, n, m):
    rng = np.random.default_rng(seed)
    p = 4
    beta = np.array([1.5, -1.0, 0.0, 0.0])
    cfg = DgpConfig(n=n, p=p, theta_true=Coefficients(-2.0 + 0.5 * rng.standard_normal(), beta),
                    pool_size=m, se=float(rng.uniform(0.85, 0.99)), sp=float(rng.uniform(0.85, 0.99)),
                    seed=int(rng.integers(1 << 31)))
    data = simulate_dataset(cfg).dataset
    fit = em_fit(data, float(rng.uniform(0.5, 3.0)))
    return data, fit


def relative_frobenius(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


@pytest.mark.unit
class TestLouisInformation:

    @pytest.mark.parametrize("seed,m", [(1, 1), (2, 2), (3, 4), (4, 2), (5, 4)])
    def test_matches_finite_difference_hessian(self, seed, m):
        data, fit = random_instance(seed, 200, m)
        theta_M = fit.submodel()
        louis = louis_information(fit, theta_M, data).matrix
        assert relative_frobenius(louis, numerical_information(theta_M, data)) < 1e-4

    def test_hessian_identity_holds_away_from_the_fit(self, small_pooled):
        fit = em_fit(small_pooled, 2.0)
        theta_M = SubmodelCoefficients((0, 1, 3), -2.5, np.array([1.0, 0.6, -0.3]))
        louis = louis_information(fit, theta_M, small_pooled).matrix
        assert relative_frobenius(louis, numerical_information(theta_M, small_pooled)) < 1e-4

    def test_factored_moments_match_dense(self, small_pooled):
        fit = em_fit(small_pooled, 2.0)
        theta_M = fit.submodel()
        D = submodel_design(small_pooled, theta_M.model)
        moments = conditional_cross_moments(theta_M, small_pooled)
        np.testing.assert_allclose(moments.quadratic_form(D), D.T @ moments.dense() @ D, rtol=1e-9, atol=1e-9)

    def test_literal_variant_differs_by_score_outer_product(self, small_pooled):
        fit = em_fit(small_pooled, 2.0)
        theta_M = fit.submodel()
        full = louis_information(fit, theta_M, small_pooled).matrix
        literal = louis_information(fit, theta_M, small_pooled, include_score_term=False).matrix
        D = submodel_design(small_pooled, theta_M.model)
        score = D.T @ conditional_cross_moments(theta_M, small_pooled).residual
        np.testing.assert_allclose(full - literal, np.outer(score, score), rtol=1e-9, atol=1e-9)
        expected = np.concatenate(([0.0], fit.lam * fit.signs))
        np.testing.assert_allclose(score, expected, atol=1e-2)

    def test_perfect_individual_tests_give_complete_information(self):
        cfg = DgpConfig(n=150, p=3, theta_true=Coefficients(-0.5, [1.0, 0.0, 0.5]), se=1.0, sp=1.0, seed=9)
        data = simulate_dataset(cfg).dataset
        fit = em_fit(data, 1.0)
        theta_M = fit.submodel()
        louis = louis_information(fit, theta_M, data).matrix
        np.testing.assert_allclose(louis, complete_data_information(theta_M, data), rtol=1e-8, atol=1e-8)

    def test_beta_block_is_positive_definite(self, small_pooled):
        fit = em_fit(small_pooled, 2.0)
        estimate = louis_information(fit, fit.submodel(), small_pooled)
        assert not estimate.degenerate
        assert estimate.block.shape == (len(fit.model), len(fit.model))
        assert np.all(np.linalg.eigvalsh(estimate.beta_information()) > 0)

    @pytest.mark.parametrize("seed,m", [(6, 1), (7, 2), (8, 4)])
    def test_missing_information_is_positive_semidefinite(self, seed, m):
        data, fit = random_instance(seed, 200, m)
        theta_M = fit.submodel()
        missing = complete_data_information(theta_M, data) - louis_information(fit, theta_M, data).matrix
        assert np.linalg.eigvalsh(missing).min() >= -1e-8 * abs(np.trace(missing))

    def test_joint_positive_probability_within_a_pool(self):
        data = Dataset(np.zeros((2, 1)), (np.array([0, 1]),), [1], 0.95, 0.97)
        moments = conditional_cross_moments(SubmodelCoefficients((), logit(0.1), []), data)
        pi, y_hat = moments.pi, moments.y_hat
        assert moments.scale[0] * pi[0] * pi[1] == pytest.approx(0.95 * 0.01 / 0.2048, rel=1e-12)
        assert moments.scale[0] * pi[0] * pi[1] == pytest.approx(0.046387, abs=1e-6)
        joint = moments.dense()[0, 1] + y_hat[0] * pi[1] + pi[0] * y_hat[1] - pi[0] * pi[1]
        assert joint == pytest.approx(0.046387, abs=1e-6)


@pytest.mark.unit
class TestSandwich:

    def test_covariance_shape_and_symmetry(self, small_pooled):
        fit = em_fit(small_pooled, 2.0)
        estimate = sandwich_covariance(fit, fit.submodel(), small_pooled)
        k = len(fit.model) + 1
        assert estimate.kind == 'covariance'
        assert estimate.matrix.shape == (k, k)
        np.testing.assert_allclose(estimate.matrix, estimate.matrix.T)
        assert np.all(np.diag(estimate.beta_covariance()) > 0)

    def test_zero_residuals_give_zero_covariance(self, small_pooled):
        fit = em_fit(small_pooled, 2.0)
        uninformative = small_pooled.with_accuracy(0.5, 0.5)
        theta_M = fit.submodel()
        np.testing.assert_allclose(conditional_cross_moments(theta_M, uninformative).residual, 0.0, atol=1e-14)
        estimate = sandwich_covariance(fit, theta_M, uninformative)
        np.testing.assert_allclose(estimate.matrix, 0.0, atol=1e-20)


@pytest.mark.unit
class TestCentralHessian:

    def test_exact_for_cubic_away_from_the_origin(self):
        def func(x):
            return x[0] ** 3 + x[0] * x[1] - 0.5 * x[1] ** 2

        hessian = central_hessian(func, [10.0, -2.0])
        np.testing.assert_allclose(hessian, [[60.0, 1.0], [1.0, -1.0]], rtol=1e-6, atol=1e-3)
