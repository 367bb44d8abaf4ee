"""Selective, naive and data-splitting confidence intervals."""

import math
from dataclasses import asdict, dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from scipy.special import ndtri

from ..config.parse_config import FitSettings
from ..errors import (
    ConvergenceError,
    DatasetValidationError,
    DegenerateDesignError,
    InconsistentEventError,
    InvalidContrastError,
    TailDegeneracyError,
)
from ..fitting.em import PenalizedFit, em_fit
from ..model.dataset import Coefficients, Dataset, SubmodelCoefficients
from ..utils.timing import measure_inference
from .information import information_for
from .selection import PostSelectionEstimate, TruncationInterval, truncation_interval
from .truncnorm import TruncatedGaussianSpec, truncated_normal_cdf

BISECTION_MAX_ITERATIONS = 200
BRACKET_MAX_EXPANSIONS = 60
EVENT_SLACK = 1e-8
PIVOT_TOLERANCE = 1e-6


def _exp(value: float) -> float:
    try:
        return math.exp(value)
    except OverflowError:
        return math.inf


@dataclass(frozen=True)
class IntervalEstimate:
    target: str
    lower: float
    upper: float
    level: float
    method: str
    point: float
    coef: Optional[int] = None
    pivot_at_point: Optional[float] = None
    pivot_at_zero: Optional[float] = None
    v_minus: Optional[float] = None
    v_plus: Optional[float] = None
    degenerate: bool = False
    pivot_median: Optional[float] = None

    @property
    def odds_lower(self) -> float:
        return _exp(self.lower)

    @property
    def odds_upper(self) -> float:
        return _exp(self.upper)

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def covers(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    def to_dict(self) -> dict:
        record = asdict(self)
        record['odds_lower'] = self.odds_lower
        record['odds_upper'] = self.odds_upper
        return record


def normal_quantile(level: float) -> float:
    if not 0.0 < level < 1.0:
        raise ValueError(f"Confidence level must lie in (0, 1), got {level}")
    return float(ndtri(1.0 - (1.0 - level) / 2.0))


def wald_interval(point: float, variance: float, level: float, target: str,
                  method: str = 'naive', coef: Optional[int] = None) -> IntervalEstimate:
    if not variance > 0 or not math.isfinite(variance):
        raise DegenerateDesignError(f"Non-positive variance {variance} for {target}")
    half = normal_quantile(level) * math.sqrt(variance)
    return IntervalEstimate(target, point - half, point + half, level, method, point, coef)


def selective_pivot(est: Optional[PostSelectionEstimate], trunc: TruncationInterval, mu0: float) -> float:
    """F^{[v-, v+]}_{mu0, xi^T I_hat^{-1} xi}(xi^T beta_bar)."""
    observed = _checked_observation(est, trunc)
    spec = TruncatedGaussianSpec(float(mu0), trunc.variance, trunc.v_minus, trunc.v_plus)
    return truncated_normal_cdf(spec, observed)


def _checked_observation(est: Optional[PostSelectionEstimate], trunc: TruncationInterval) -> float:
    if est is not None:
        if len(trunc.contrast) != len(est.event.model):
            raise InvalidContrastError(
                f"Contrast has {len(trunc.contrast)} entries, model {est.event.model} has {len(est.event.model)}")
        if est.degenerate:
            raise DegenerateDesignError(f"Information for model {est.event.model} is not positive definite")
    if not trunc.v_zero_ok:
        raise InconsistentEventError("Selection event rows independent of the contrast are violated")
    slack = EVENT_SLACK * (1.0 + abs(trunc.observed))
    if not trunc.v_minus - slack <= trunc.observed <= trunc.v_plus + slack:
        raise InconsistentEventError(
            f"Observed contrast {trunc.observed:.6g} lies outside [{trunc.v_minus:.6g}, {trunc.v_plus:.6g}]")
    if not trunc.v_minus < trunc.v_plus:
        raise InconsistentEventError(f"Empty truncation interval [{trunc.v_minus:.6g}, {trunc.v_plus:.6g}]")
    return min(max(trunc.observed, trunc.v_minus), trunc.v_plus)


def _find_root(pivot: Callable[[float], float], observed: float, target: float, step: float,
               tolerance: float) -> Tuple[float, bool]:
    """mu with pivot(mu) = target for a pivot decreasing in mu; the flag marks a failed solve."""
    lo, hi = observed - step, observed + step
    expansions = 0
    while pivot(lo) < target:
        expansions += 1
        if expansions > BRACKET_MAX_EXPANSIONS:
            return lo, True
        lo = observed - step * 2.0 ** expansions
    expansions = 0
    while pivot(hi) > target:
        expansions += 1
        if expansions > BRACKET_MAX_EXPANSIONS:
            return hi, True
        hi = observed + step * 2.0 ** expansions

    for _ in range(BISECTION_MAX_ITERATIONS):
        mid = 0.5 * (lo + hi)
        value = pivot(mid)
        if value > target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tolerance * (1.0 + abs(mid)) and abs(value - target) <= 1e-9:
            break
    root = 0.5 * (lo + hi)
    miss = abs(pivot(root) - target)
    if miss > PIVOT_TOLERANCE:
        logger.debug(f"Pivot misses its target {target:g} by {miss:.2e} at mu={root:.6g}")
        return root, True
    return root, False


def selective_ci(est: Optional[PostSelectionEstimate], trunc: TruncationInterval, level: float,
                 target: Optional[str] = None, coef: Optional[int] = None,
                 tolerance: float = 1e-8) -> IntervalEstimate:
    """Invert the truncated-normal pivot: F(lower) = 1 - a/2 and F(upper) = a/2.

    ``est`` is checked against the contrast when given. ``pivot_median`` is the
    mu with F(mu) = 1/2.
    """
    observed = _checked_observation(est, trunc)
    z = normal_quantile(level)
    naive_width = 2.0 * z * math.sqrt(trunc.variance)
    tail = (1.0 - level) / 2.0
    flags = {'degenerate': False}

    def pivot(mu: float) -> float:
        try:
            return truncated_normal_cdf(TruncatedGaussianSpec(mu, trunc.variance, trunc.v_minus, trunc.v_plus),
                                        observed)
        except TailDegeneracyError:
            flags['degenerate'] = True
            return 1.0 if mu < observed else 0.0

    step = 10.0 * naive_width
    lower, lower_flag = _find_root(pivot, observed, 1.0 - tail, step, tolerance)
    upper, upper_flag = _find_root(pivot, observed, tail, step, tolerance)
    degenerate = flags['degenerate'] or lower_flag or upper_flag
    median, median_flag = _find_root(pivot, observed, 0.5, step, tolerance)
    if degenerate:
        logger.warning(f"Selective interval for {target or 'contrast'} hit a degenerate tail; "
                       f"endpoints [{lower:.4g}, {upper:.4g}] are not reliable")

    pivot_zero = pivot(0.0)
    return IntervalEstimate(
        target=target or _contrast_label(trunc.contrast),
        lower=lower,
        upper=upper,
        level=level,
        method='selective',
        point=trunc.observed,
        coef=coef,
        pivot_at_point=pivot(trunc.observed),
        pivot_at_zero=pivot_zero,
        v_minus=trunc.v_minus,
        v_plus=trunc.v_plus,
        degenerate=degenerate,
        pivot_median=None if median_flag else median,
    )


def _contrast_label(xi: np.ndarray) -> str:
    return "contrast(" + ",".join(f"{w:g}" for w in xi) + ")"


@measure_inference
def selective_intervals(est: PostSelectionEstimate, data: Dataset, level: float) -> List[IntervalEstimate]:
    """One selective interval per selected coefficient."""
    model = est.event.model
    intervals = []
    for k, j in enumerate(model):
        xi = np.zeros(len(model))
        xi[k] = 1.0
        trunc = truncation_interval(est, xi)
        intervals.append(selective_ci(est, trunc, level, target=data.covariate_names[j], coef=j))
    return intervals


@dataclass(frozen=True, eq=False)
class Refit:
    """Unpenalized fit of a fixed model and the profiled covariance of its slopes."""

    model: Tuple[int, ...]
    beta: np.ndarray
    covariance: np.ndarray
    fit: PenalizedFit


def unpenalized_refit(data: Dataset, model: Sequence[int],
                      init: Optional[SubmodelCoefficients] = None,
                      settings: Optional[FitSettings] = None,
                      information: str = 'louis') -> Refit:
    model = tuple(model)
    restricted = data.restrict_columns(model)
    start = Coefficients(init.alpha, init.beta_M) if init is not None else None
    fit = em_fit(restricted, 0.0, init=start, settings=settings)
    if not fit.converged:
        raise ConvergenceError(f"Unpenalized refit of model {model} did not converge", fit.em_trace)
    theta_tilde = SubmodelCoefficients(tuple(range(len(model))), fit.theta_hat.alpha, fit.theta_hat.beta)
    covariance = information_for(fit, theta_tilde, restricted, information).beta_covariance()
    return Refit(model, theta_tilde.beta_M, covariance, fit)


def refit_wald_intervals(data: Dataset, model: Sequence[int], level: float, method: str,
                         init: Optional[SubmodelCoefficients] = None,
                         settings: Optional[FitSettings] = None,
                         information: str = 'louis') -> List[IntervalEstimate]:
    """Unpenalized EM refit on the columns in ``model`` with Wald intervals."""
    if not tuple(model):
        return []
    refit = unpenalized_refit(data, model, init, settings, information)
    return [
        wald_interval(float(refit.beta[k]), float(refit.covariance[k, k]), level,
                      data.covariate_names[j], method=method, coef=j)
        for k, j in enumerate(refit.model)
    ]


def naive_ci(fit: PenalizedFit, data: Dataset, level: float,
             settings: Optional[FitSettings] = None, information: str = 'louis') -> List[IntervalEstimate]:
    """Classical intervals treating the selected model as fixed in advance."""
    return refit_wald_intervals(data, fit.model, level, 'naive', init=fit.submodel(),
                                settings=settings, information=information)


def contrast_wald_interval(refit: Refit, xi, level: float, label: str) -> IntervalEstimate:
    xi = np.asarray(xi, dtype=float)
    return wald_interval(float(xi @ refit.beta), float(xi @ refit.covariance @ xi), level, label)


def split_pools(n_pools: int, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """Seeded shuffle of pool indices into ceil(J/2) training and floor(J/2) testing pools."""
    order = np.random.default_rng(seed).permutation(n_pools)
    cut = (n_pools + 1) // 2
    return np.sort(order[:cut]), np.sort(order[cut:])


@dataclass(frozen=True, eq=False)
class SplitOutcome:
    intervals: List[IntervalEstimate]
    model: Tuple[int, ...]
    attempt: int
    train_pools: np.ndarray
    test_pools: np.ndarray


def split_inference_detailed(data: Dataset, lam: float, level: float, seed: int,
                             target_model: Optional[Sequence[int]] = None, max_attempts: int = 1,
                             settings: Optional[FitSettings] = None) -> SplitOutcome:
    """Select on half of the pools and refit on the other half.

    With ``target_model`` the split is redrawn with seeds seed, seed+1, ...
    until the training selection matches, at most ``max_attempts`` times; the
    last split is used when none matches.
    """
    if data.n_pools < 2:
        raise DatasetValidationError("Data splitting needs at least two pools")
    target = tuple(int(j) for j in target_model) if target_model is not None else None
    for attempt in range(max(1, max_attempts)):
        train_pools, test_pools = split_pools(data.n_pools, seed + attempt)
        fit = em_fit(data.subset_pools(train_pools), lam, settings=settings)
        if not fit.converged:
            raise ConvergenceError(f"Training-half fit did not converge (lambda={lam:g})", fit.em_trace)
        model = fit.model
        if target is None or model == target:
            break
        logger.debug(f"Split attempt {attempt + 1} selected {model}, wanted {target}")
    else:
        logger.info(f"No split out of {max_attempts} reproduced model {target}; using the last one")

    intervals = refit_wald_intervals(data.subset_pools(test_pools), model, level, 'split', settings=settings)
    return SplitOutcome(intervals, model, attempt + 1, train_pools, test_pools)


def split_inference(data: Dataset, lam: float, level: float, seed: int,
                    settings: Optional[FitSettings] = None) -> List[IntervalEstimate]:
    return split_inference_detailed(data, lam, level, seed, settings=settings).intervals
