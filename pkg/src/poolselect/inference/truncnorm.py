"""Truncated normal CDF evaluated through log normal tails.

Differences of normal CDFs are formed relative to the dominant tail in log
space, so truncation regions many standard deviations from the mean keep
their relative precision instead of collapsing to 0/0.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfcx, log_ndtr

from ..errors import TailDegeneracyError

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class TruncatedGaussianSpec:
    mu: float
    sigma2: float
    a: float = -math.inf
    b: float = math.inf

    def __post_init__(self):
        if not self.sigma2 > 0 or not math.isfinite(self.sigma2):
            raise ValueError(f"sigma2 must be positive and finite, got {self.sigma2}")
        if not self.a < self.b:
            raise ValueError(f"Truncation requires a < b, got [{self.a}, {self.b}]")
        if not math.isfinite(self.mu):
            raise ValueError(f"mu must be finite, got {self.mu}")

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)


def _standardize(value: float, mu: float, sigma: float) -> float:
    if math.isinf(value):
        return value
    return (value - mu) / sigma


def _log_ndtr_gap(u: float, v: float, gap: float) -> float:
    """log Phi(u) - log Phi(v), where ``gap`` is u - v taken from unstandardized values.

    When both points sit in the lower tail, Phi(t) = exp(-t^2 / 2) erfcx(-t / sqrt 2) / 2
    turns the difference into -gap (u + v) / 2 plus a ratio near one, which keeps its
    relative precision however far out u and v are.
    """
    if u == -math.inf:
        return -math.inf
    if u <= 0.0 and v <= 0.0:
        return -0.5 * gap * (u + v) + math.log(erfcx(-u / SQRT2) / erfcx(-v / SQRT2))
    return float(log_ndtr(u) - log_ndtr(v))


def _gap(left: float, right: float, sigma: float) -> float:
    return (left - right) / sigma


def truncated_normal_cdf(spec: TruncatedGaussianSpec, x: float) -> float:
    if x <= spec.a:
        return 0.0
    if x >= spec.b:
        return 1.0
    sigma = spec.sigma
    lo = _standardize(spec.a, spec.mu, sigma)
    hi = _standardize(spec.b, spec.mu, sigma)
    at = _standardize(x, spec.mu, sigma)

    if lo > 0.0:
        # Region in the upper tail: mirror to Phi(-t) so every argument is non-positive.
        log_at = _log_ndtr_gap(-at, -lo, _gap(spec.a, x, sigma))
        log_hi = _log_ndtr_gap(-hi, -lo, _gap(spec.a, spec.b, sigma))
        numerator = -math.expm1(log_at)
        denominator = -math.expm1(log_hi)
    else:
        log_ratio = _log_ndtr_gap(at, hi, _gap(x, spec.b, sigma))
        log_lo_at = _log_ndtr_gap(lo, at, _gap(spec.a, x, sigma))
        log_lo_hi = _log_ndtr_gap(lo, hi, _gap(spec.a, spec.b, sigma))
        numerator = math.exp(log_ratio) * -math.expm1(log_lo_at)
        denominator = -math.expm1(log_lo_hi)

    if not denominator > 0.0 or not np.isfinite(numerator):
        raise TailDegeneracyError(
            f"Truncated normal mass vanished for mu={spec.mu:g}, sigma={sigma:g}, "
            f"[{spec.a:g}, {spec.b:g}]")
    return min(1.0, max(0.0, numerator / denominator))
