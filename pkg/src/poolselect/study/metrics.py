"""Per-dataset error and coverage metrics."""

from typing import Mapping, Sequence, Tuple, Union

import numpy as np

from ..inference.intervals import IntervalEstimate
from ..model.dataset import Coefficients

IntervalLike = Union[IntervalEstimate, Tuple[float, float], Sequence[float]]


def _bounds(interval: IntervalLike) -> Tuple[float, float]:
    if isinstance(interval, IntervalEstimate):
        return interval.lower, interval.upper
    return float(interval[0]), float(interval[1])


def type_i_error_rate(model: Sequence[int], intervals: Mapping[int, IntervalLike],
                      theta_true: Coefficients) -> float:
    """Share of selected truly-null coefficients whose interval excludes zero; 0 if none selected."""
    nulls = [j for j in model if theta_true.beta[j] == 0.0]
    if not nulls:
        return 0.0
    rejections = 0
    for j in nulls:
        lower, upper = _bounds(intervals[j])
        if lower > 0.0 or upper < 0.0:
            rejections += 1
    return rejections / len(nulls)


def covers(interval: IntervalLike, value: float) -> bool:
    lower, upper = _bounds(interval)
    return lower <= value <= upper


def binomial_band(rate: float, count: int, sigmas: float = 3.0) -> Tuple[float, float]:
    """rate +/- sigmas * sqrt(rate (1 - rate) / count)."""
    half = sigmas * np.sqrt(rate * (1.0 - rate) / max(count, 1))
    return rate - half, rate + half
