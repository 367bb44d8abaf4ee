#!/usr/bin/env python3
"""
Test cases for the data-generating process, the lambda grids and per-dataset metrics.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent / 'src'))

from poolselect.errors import ConfigurationError, DatasetValidationError
from poolselect.inference.intervals import IntervalEstimate
from poolselect.model.dataset import Coefficients
from poolselect.study.dgp import (
    DgpConfig,
    default_theta,
    lambda_grid,
    pool_individual_data,
    simulate_dataset,
)
from poolselect.study.metrics import binomial_band, covers, type_i_error_rate


@pytest.mark.unit
class TestSimulateDataset:

    def test_default_coefficients(self):
        theta = default_theta()
        assert theta.alpha == -5.0
        assert theta.beta.tolist() == [2.0, 1.0, 1.0] + [0.0] * 7
        with pytest.raises(ConfigurationError):
            default_theta(2)

    @pytest.mark.parametrize("m", [1, 2, 4])
    def test_perfect_tests_report_pool_maximum(self, m):
        sim = simulate_dataset(DgpConfig(n=200, pool_size=m, se=1.0, sp=1.0, seed=m))
        data = sim.dataset
        assert data.n_pools == 200 // m
        expected = np.array([sim.y_true[pool].max() for pool in data.pools])
        np.testing.assert_array_equal(data.z, expected)
        np.testing.assert_array_equal(sim.pool_truth, expected)

    def test_ragged_last_pool(self):
        data = simulate_dataset(DgpConfig(n=10, p=3, theta_true=default_theta(3), pool_size=4)).dataset
        assert data.pool_sizes.tolist() == [4, 4, 2]

    def test_deterministic_for_a_seed(self):
        cfg = DgpConfig(n=300, pool_size=2, seed=17)
        first = simulate_dataset(cfg)
        second = simulate_dataset(cfg)
        assert first.dataset == second.dataset
        assert first.dataset.digest() == second.dataset.digest()
        assert simulate_dataset(cfg, seed=18).dataset.digest() != first.dataset.digest()

    def test_seed_sequence_accepted(self):
        seed = np.random.SeedSequence(4).spawn(2)[1]
        first = simulate_dataset(DgpConfig(n=50), seed=seed).dataset
        second = simulate_dataset(DgpConfig(n=50), seed=np.random.SeedSequence(4).spawn(2)[1]).dataset
        assert first == second

    @pytest.mark.slow
    def test_prevalence_of_default_model(self):
        sim = simulate_dataset(DgpConfig(n=100_000, seed=1))
        assert sim.y_true.mean() == pytest.approx(0.035, abs=0.01)

    @pytest.mark.parametrize("kwargs", [
        dict(n=0),
        dict(pool_size=0),
        dict(se=0.0),
        dict(sp=1.2),
        dict(p=5),
    ])
    def test_invalid_config(self, kwargs):
        with pytest.raises(ConfigurationError):
            DgpConfig(**kwargs)


@pytest.mark.unit
class TestArtificialPooling:

    def test_pools_individual_outcomes(self, small_individual):
        pooled = pool_individual_data(small_individual, 3, 1.0, 1.0, seed=6)
        assert pooled.n == small_individual.n
        assert pooled.n_pools == 100
        assert pooled.covariate_names == small_individual.covariate_names
        # Perfect tests: a pool is positive when any member tested positive individually.
        rows = {tuple(row) for row in small_individual.X[small_individual.z == 1]}
        for pool, outcome in zip(pooled.pools, pooled.z):
            positives = sum(tuple(row) in rows for row in pooled.X[pool])
            assert outcome == int(positives > 0)

    def test_rejects_pooled_input(self, small_pooled):
        with pytest.raises(DatasetValidationError):
            pool_individual_data(small_pooled, 2, 0.95, 0.97, seed=1)

    def test_deterministic(self, small_individual):
        first = pool_individual_data(small_individual, 2, 0.9, 0.9, seed=3)
        second = pool_individual_data(small_individual, 2, 0.9, 0.9, seed=3)
        assert first == second


@pytest.mark.unit
class TestLambdaGrid:

    @pytest.mark.parametrize("n,low,high", [(1000, 1.0, 7.0), (2000, 0.5, 10.0)])
    def test_standard_ranges(self, n, low, high):
        grid = lambda_grid(n)
        assert grid.size == 25
        assert grid[0] == pytest.approx(low)
        assert grid[-1] == pytest.approx(high)
        ratios = grid[1:] / grid[:-1]
        np.testing.assert_allclose(ratios, ratios[0], rtol=1e-10)

    def test_explicit_bounds(self):
        grid = lambda_grid(500, size=3, bounds=(1.0, 4.0))
        np.testing.assert_allclose(grid, [1.0, 2.0, 4.0])
        assert lambda_grid(500, size=1, bounds=(2.0, 5.0)).tolist() == [2.0]

    @pytest.mark.parametrize("n,kwargs", [
        (500, {}),
        (1000, dict(size=0)),
        (1000, dict(bounds=(0.0, 1.0))),
        (1000, dict(bounds=(3.0, 1.0))),
    ])
    def test_invalid(self, n, kwargs):
        with pytest.raises(ConfigurationError):
            lambda_grid(n, **kwargs)


@pytest.mark.unit
class TestMetrics:

    def setup_method(self):
        self.theta = Coefficients(-5.0, [2.0, 1.0, 1.0, 0.0, 0.0, 0.0])

    def test_no_null_selected(self):
        intervals = {0: (1.0, 3.0), 1: (0.2, 1.5)}
        assert type_i_error_rate((0, 1), intervals, self.theta) == 0.0

    def test_fraction_of_rejected_nulls(self):
        intervals = {0: (1.0, 3.0), 3: (0.1, 0.9), 4: (-0.5, 0.5), 5: (-2.0, -0.1)}
        assert type_i_error_rate((0, 3, 4, 5), intervals, self.theta) == pytest.approx(2 / 3)

    def test_interval_estimates_accepted(self):
        ci = IntervalEstimate('x4', -0.3, 0.4, 0.95, 'selective', 0.1, coef=3)
        assert type_i_error_rate((3,), {3: ci}, self.theta) == 0.0
        assert covers(ci, 0.0)
        assert not covers((0.5, 1.0), 0.0)
        assert covers((0.0, 1.0), 0.0)

    def test_binomial_band(self):
        low, high = binomial_band(0.95, 1000)
        assert low == pytest.approx(0.95 - 3 * np.sqrt(0.95 * 0.05 / 1000))
        assert high == pytest.approx(0.95 + 3 * np.sqrt(0.95 * 0.05 / 1000))
