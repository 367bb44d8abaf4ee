#!/usr/bin/env python3
"""
Test cases for the truncated normal CDF, including far-tail truncation.
"""

import math
import sys
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent / 'src'))

from poolselect.inference.truncnorm import TruncatedGaussianSpec, truncated_normal_cdf


@pytest.mark.unit
class TestTruncatedNormalCdf:

    @pytest.mark.parametrize("x", [-2.0, -0.3, 0.0, 1.1, 2.5])
    def test_untruncated_is_normal_cdf(self, x):
        spec = TruncatedGaussianSpec(0.4, 2.25)
        assert truncated_normal_cdf(spec, x) == pytest.approx(stats.norm.cdf(x, 0.4, 1.5), rel=1e-12)

    @pytest.mark.parametrize("mu,sigma,a,b", [
        (0.0, 1.0, -1.0, 2.0),
        (1.0, 0.5, 1.2, 3.0),
        (-2.0, 2.0, -np.inf, -1.0),
        (0.0, 1.0, 0.5, np.inf),
    ])
    def test_matches_scipy_in_the_bulk(self, mu, sigma, a, b):
        spec = TruncatedGaussianSpec(mu, sigma ** 2, a, b)
        lo = a if np.isfinite(a) else mu - 6 * sigma
        hi = b if np.isfinite(b) else mu + 6 * sigma
        reference = stats.truncnorm((a - mu) / sigma, (b - mu) / sigma, loc=mu, scale=sigma)
        for x in np.linspace(lo, hi, 9)[1:-1]:
            assert truncated_normal_cdf(spec, x) == pytest.approx(reference.cdf(x), abs=1e-10)

    def test_far_upper_tail(self):
        a, x = 30.0, 30.01
        spec = TruncatedGaussianSpec(0.0, 1.0, a, math.inf)
        expected = 1.0 - (a / x) * math.exp(-(x * x - a * a) / 2.0)
        assert truncated_normal_cdf(spec, x) == pytest.approx(expected, abs=1e-4)

    def test_far_lower_tail_mirrors_upper(self):
        upper = TruncatedGaussianSpec(0.0, 1.0, 25.0, 26.0)
        lower = TruncatedGaussianSpec(0.0, 1.0, -26.0, -25.0)
        for x in (25.001, 25.01, 25.1, 25.5):
            assert truncated_normal_cdf(upper, x) == pytest.approx(1.0 - truncated_normal_cdf(lower, -x),
                                                                   abs=1e-9)

    def test_monotone_in_mu(self):
        values = [truncated_normal_cdf(TruncatedGaussianSpec(mu, 1.0, 2.0, 8.0), 3.0)
                  for mu in np.linspace(-10, 15, 60)]
        assert all(b <= a + 1e-15 for a, b in zip(values, values[1:]))
        assert all(0.0 <= v <= 1.0 for v in values)

    def test_outside_support(self):
        spec = TruncatedGaussianSpec(0.0, 1.0, -1.0, 1.0)
        assert truncated_normal_cdf(spec, -1.0) == 0.0
        assert truncated_normal_cdf(spec, 1.5) == 1.0

    @pytest.mark.parametrize("kwargs", [
        dict(mu=0.0, sigma2=0.0),
        dict(mu=0.0, sigma2=-1.0),
        dict(mu=0.0, sigma2=1.0, a=1.0, b=1.0),
        dict(mu=np.nan, sigma2=1.0),
    ])
    def test_invalid_spec(self, kwargs):
        with pytest.raises(ValueError):
            TruncatedGaussianSpec(**kwargs)

    def test_one_sided_region_far_from_the_mean(self):
        # X ~ N(1.5e8, 4) given X <= 0, at x = -1e-7: the ratio is exp(-3.75) to first order.
        below = TruncatedGaussianSpec(1.5e8, 4.0, -math.inf, 0.0)
        assert truncated_normal_cdf(below, -1e-7) == pytest.approx(math.exp(-3.75), rel=1e-6)
        above = TruncatedGaussianSpec(-1.5e8, 4.0, 0.0, math.inf)
        assert truncated_normal_cdf(above, 1e-7) == pytest.approx(1.0 - math.exp(-3.75), rel=1e-6)

    def test_two_sided_region_far_from_the_mean(self):
        spec = TruncatedGaussianSpec(-1e6, 1.0, 1.0, 1.0 + 1e-6)
        # Within the window the density is proportional to exp(-(1e6 + 1) t).
        rate = 1e6 + 1.0
        expected = math.expm1(-rate * 5e-7) / math.expm1(-rate * 1e-6)
        assert truncated_normal_cdf(spec, 1.0 + 5e-7) == pytest.approx(expected, rel=1e-4)
