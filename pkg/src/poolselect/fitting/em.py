"""EM algorithm with LASSO-penalized M-steps for individual and pooled tests."""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from loguru import logger
from scipy.special import logit

from ..config.parse_config import FitSettings
from ..errors import ConvergenceError
from ..model.dataset import Coefficients, Dataset, SubmodelCoefficients
from ..model.likelihood import aic_bic, logistic_means, penalized_observed_objective
from ..utils.timing import measure_em_fit
from .estep import e_step_group
from .mstep import solve_penalized_logistic


@dataclass(frozen=True, eq=False)
class PenalizedFit:
    """State of the EM fit at convergence.

    ``y_hat`` is the imputed response the final M-step was solved for, and
    ``weights`` and ``working_response`` are the IRLS quantities W and z built
    from it and ``theta_hat``, so theta_hat is the exact LASSO solution for z.
    """

    theta_hat: Coefficients
    y_hat: np.ndarray
    weights: np.ndarray
    working_response: np.ndarray
    lam: float
    iterations: int
    converged: bool
    em_trace: Tuple[float, ...]
    m_step_converged: bool = True

    @property
    def model(self) -> Tuple[int, ...]:
        return self.theta_hat.support()

    @property
    def signs(self) -> np.ndarray:
        return np.sign(self.theta_hat.beta[list(self.model)])

    def submodel(self) -> SubmodelCoefficients:
        return self.theta_hat.restrict(self.model)


def initial_coefficients(data: Dataset) -> Coefficients:
    """Moment-matched start: prevalence implied by the pooled positive rate, beta = 0."""
    pooled_rate = float(data.z.mean())
    denominator = data.se + data.sp - 1.0
    if denominator <= 0:
        adjusted = 0.5
    else:
        adjusted = (pooled_rate + data.sp - 1.0) / denominator
    adjusted = float(np.clip(adjusted, 0.001, 0.999))
    individual = 1.0 - (1.0 - adjusted) ** (1.0 / data.mean_pool_size)
    return Coefficients(float(logit(np.clip(individual, 0.01, 0.99))), np.zeros(data.p))


def irls_quantities(theta: Coefficients, y_hat: np.ndarray, data: Dataset,
                    weight_floor: float = 1e-10) -> Tuple[np.ndarray, np.ndarray]:
    """Weights pi(1 - pi) (floored) and working response eta + (y_hat - pi) / w."""
    pi = logistic_means(theta, data.X)
    weights = np.maximum(pi * (1.0 - pi), weight_floor)
    eta = theta.alpha + data.X @ theta.beta
    return weights, eta + (y_hat - pi) / weights


@measure_em_fit
def em_fit(data: Dataset, lam: float, init: Optional[Coefficients] = None,
           settings: Optional[FitSettings] = None) -> PenalizedFit:
    """Alternate E-steps and exact penalized M-steps until the imputed responses settle.

    Stops when n^{-1/2} ||Y_hat(k+1) - Y_hat(k)||_2 falls below the EM tolerance;
    hitting the iteration cap returns ``converged=False`` with the trace attached.
    """
    settings = settings or FitSettings()
    lam = float(lam)
    if lam < 0 or not np.isfinite(lam):
        raise ValueError(f"Penalty must be a finite non-negative number, got {lam}")
    theta = init if init is not None else initial_coefficients(data)
    if theta.p != data.p:
        raise ValueError(f"Initial coefficients have p={theta.p}, dataset has p={data.p}")

    y_hat = e_step_group(theta, data)
    trace = [penalized_observed_objective(theta, data, lam)]
    converged = False
    m_step_converged = True
    iteration = 0
    root_n = np.sqrt(data.n)

    y_fed = y_hat
    while iteration < settings.em_max_iterations:
        iteration += 1
        y_fed = y_hat
        step = solve_penalized_logistic(data.X, y_fed, lam, warm_start=theta, settings=settings)
        m_step_converged = m_step_converged and step.converged
        theta = step.coefficients

        y_next = e_step_group(theta, data)
        trace.append(penalized_observed_objective(theta, data, lam))
        if trace[-1] < trace[-2] - settings.ascent_slack:
            logger.warning(f"EM objective decreased by {trace[-2] - trace[-1]:.3e} at iteration "
                           f"{iteration} (lambda={lam:g})")

        delta = float(np.linalg.norm(y_next - y_hat)) / root_n
        y_hat = y_next
        logger.debug(f"EM iteration {iteration}: objective={trace[-1]:.10g} delta={delta:.3e}")
        if delta < settings.em_tolerance:
            converged = True
            break

    if converged:
        logger.debug(f"EM converged in {iteration} iterations (lambda={lam:g}, "
                     f"|M|={len(theta.support())})")
    else:
        logger.warning(f"EM did not converge within {settings.em_max_iterations} iterations "
                       f"(lambda={lam:g})")

    weights, working = irls_quantities(theta, y_fed, data, settings.weight_floor)
    return PenalizedFit(
        theta_hat=theta,
        y_hat=y_fed,
        weights=weights,
        working_response=working,
        lam=lam,
        iterations=iteration,
        converged=converged,
        em_trace=tuple(trace),
        m_step_converged=m_step_converged,
    )


@dataclass(frozen=True, eq=False)
class LambdaChoice:
    """Grid search result; ``aic``/``bic`` are inf where the fit did not converge."""

    criterion: str
    lam: float
    grid: Tuple[float, ...]
    aic: Tuple[float, ...]
    bic: Tuple[float, ...]
    fit: PenalizedFit


def choose_lambda(data: Dataset, grid, criterion: str = 'aic',
                  settings: Optional[FitSettings] = None) -> LambdaChoice:
    """Fit every penalty in ``grid`` from the default start and keep the AIC or BIC minimizer."""
    if criterion not in ('aic', 'bic'):
        raise ValueError(f"Criterion must be 'aic' or 'bic', got {criterion!r}")
    grid = tuple(float(lam) for lam in grid)
    fits, aic, bic = [], [], []
    for lam in grid:
        fit = em_fit(data, lam, settings=settings)
        fits.append(fit)
        if fit.converged:
            a, b = aic_bic(fit.submodel(), data)
        else:
            a = b = np.inf
        aic.append(a)
        bic.append(b)
    scores = np.asarray(aic if criterion == 'aic' else bic)
    if not np.isfinite(scores).any():
        raise ConvergenceError(f"No fit on the lambda grid converged ({len(grid)} values)")
    best = int(np.argmin(scores))
    logger.info(f"{criterion.upper()} chose lambda={grid[best]:g} (|M|={len(fits[best].model)})")
    return LambdaChoice(criterion, grid[best], grid, tuple(aic), tuple(bic), fits[best])
