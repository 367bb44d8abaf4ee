#!/usr/bin/env python3
"""
Test cases for the penalized logistic M-step and the stationarity report.
"""

import sys
from pathlib import Path

import numpy as np
import pytest
from scipy.special import expit, logit

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent / 'src'))

from poolselect.fitting.em import em_fit
from poolselect.fitting.kkt import kkt_check
from poolselect.fitting.mstep import lambda_max, soft_threshold, solve_penalized_logistic


@pytest.mark.unit
class TestSoftThreshold:

    @pytest.mark.parametrize("value,threshold,expected", [
        (3.0, 1.0, 2.0),
        (-3.0, 1.0, -2.0),
        (0.5, 1.0, 0.0),
        (-1.0, 1.0, 0.0),
    ])
    def test_values(self, value, threshold, expected):
        assert soft_threshold(value, threshold) == expected


@pytest.mark.unit
class TestMStep:

    def setup_method(self):
        rng = np.random.default_rng(21)
        self.X = rng.standard_normal((200, 4))
        eta = -0.5 + self.X @ np.array([1.2, -0.8, 0.0, 0.0])
        self.y = (rng.random(200) < expit(eta)).astype(float)

    def test_above_lambda_max_is_intercept_only(self):
        lam = lambda_max(self.y, self.X) * 1.01
        result = solve_penalized_logistic(self.X, self.y, lam)
        assert result.converged
        assert result.coefficients.support() == ()
        assert result.coefficients.alpha == pytest.approx(logit(self.y.mean()), abs=1e-8)

    def test_unpenalized_score_vanishes(self):
        result = solve_penalized_logistic(self.X, self.y, 0.0)
        theta = result.coefficients
        pi = expit(theta.alpha + self.X @ theta.beta)
        assert abs(np.sum(self.y - pi)) < 1e-6
        np.testing.assert_allclose(self.X.T @ (self.y - pi), 0.0, atol=1e-6)

    def test_penalized_stationarity(self):
        lam = 8.0
        theta = solve_penalized_logistic(self.X, self.y, lam).coefficients
        pi = expit(theta.alpha + self.X @ theta.beta)
        gradient = self.X.T @ (self.y - pi)
        for j in range(4):
            if theta.beta[j] != 0.0:
                assert gradient[j] == pytest.approx(lam * np.sign(theta.beta[j]), abs=1e-6)
            else:
                assert abs(gradient[j]) <= lam + 1e-6

    def test_fractional_responses(self):
        y_frac = np.clip(self.y * 0.8 + 0.1, 0.0, 1.0)
        result = solve_penalized_logistic(self.X, y_frac, 2.0)
        assert result.converged
        assert np.isfinite(result.objective)

    def test_negative_penalty_rejected(self):
        with pytest.raises(ValueError):
            solve_penalized_logistic(self.X, self.y, -1.0)

    def test_penalty_path_shrinks_l1_norm(self):
        warm = None
        norms = []
        for lam in (0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0):
            result = solve_penalized_logistic(self.X, self.y, lam, warm_start=warm)
            assert result.converged
            warm = result.coefficients
            norms.append(warm.l1_norm())
        assert all(later <= earlier + 1e-6 for earlier, later in zip(norms, norms[1:]))
        assert norms[-1] < norms[0]


@pytest.mark.unit
class TestKkt:

    def test_em_solution_satisfies_kkt(self, small_pooled):
        fit = em_fit(small_pooled, 3.0)
        report = kkt_check(fit, small_pooled)
        assert fit.converged
        assert report.ok, (report.stationarity_gap, report.max_inactive, report.intercept_residual)

    def test_default_tolerance_scales_with_n(self, small_pooled):
        fit = em_fit(small_pooled, 3.0)
        assert kkt_check(fit, small_pooled).tolerance == pytest.approx(1e-6 * small_pooled.n)
        assert kkt_check(fit, small_pooled, tolerance=1e-9).tolerance == 1e-9

    def test_large_penalty_leaves_empty_model(self, small_pooled):
        fit = em_fit(small_pooled, 1e4)
        report = kkt_check(fit, small_pooled)
        assert fit.model == ()
        assert report.active_residuals == {}
        assert report.ok
