"""Post-selection estimator, affine selection event and polyhedral truncation bounds."""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from loguru import logger
from scipy import linalg

from ..errors import DegenerateDesignError, EmptyModelError, InvalidContrastError
from ..fitting.em import PenalizedFit
from ..model.dataset import Dataset, SubmodelCoefficients
from .information import InformationEstimate, information_for, is_positive_definite, submodel_design

ONE_STEP_GAP_WARNING = 1e-8


@dataclass(frozen=True, eq=False)
class SelectionEvent:
    """{beta : A1 beta <= b1} with A1 = -diag(signs)."""

    model: Tuple[int, ...]
    signs: np.ndarray
    A1: np.ndarray
    b1: np.ndarray

    def contains(self, beta: np.ndarray, slack: float = 0.0) -> bool:
        return bool(np.all(self.A1 @ np.asarray(beta) <= self.b1 + slack))


@dataclass(frozen=True, eq=False)
class TruncationInterval:
    v_minus: float
    v_plus: float
    v_zero_ok: bool
    contrast: np.ndarray
    observed: float
    variance: float


@dataclass(frozen=True, eq=False)
class PostSelectionEstimate:
    theta_bar: SubmodelCoefficients
    info_hat: np.ndarray
    event: SelectionEvent
    information: Optional[InformationEstimate] = None

    @property
    def beta_bar(self) -> np.ndarray:
        return self.theta_bar.beta_M

    @property
    def degenerate(self) -> bool:
        return not (np.allclose(self.info_hat, self.info_hat.T, rtol=1e-10, atol=0.0)
                    and is_positive_definite(self.info_hat))


def _weighted_gram_factor(fit: PenalizedFit, data: Dataset, model):
    D = submodel_design(data, model)
    gram = D.T @ (fit.weights[:, None] * D)
    try:
        factor = linalg.cho_factor(gram, lower=True)
    except linalg.LinAlgError:
        raise DegenerateDesignError(f"Weighted Gram matrix of model {model} is singular")
    return D, factor


def _shrinkage_offset(fit: PenalizedFit, factor) -> np.ndarray:
    """J^{-1} [0, lam s_M]."""
    rhs = np.concatenate(([0.0], fit.lam * fit.signs))
    return linalg.cho_solve(factor, rhs)


def post_selection_estimator(fit: PenalizedFit, data: Dataset) -> SubmodelCoefficients:
    """Weighted least squares of the working response on [1, X_M].

    Also forms theta_hat_M + J^{-1}[0, lam s_M] and logs when the two
    disagree beyond 1e-8 relative.
    """
    model = fit.model
    D, factor = _weighted_gram_factor(fit, data, model)
    theta_bar = linalg.cho_solve(factor, D.T @ (fit.weights * fit.working_response))
    one_step = fit.submodel().as_vector() + _shrinkage_offset(fit, factor)
    gap = float(np.max(np.abs(theta_bar - one_step)) / (1.0 + np.max(np.abs(theta_bar))))
    if gap > ONE_STEP_GAP_WARNING:
        logger.warning(f"One-step and weighted least-squares estimators differ by {gap:.2e} "
                       f"(lambda={fit.lam:g}, model={model})")
    return SubmodelCoefficients.from_vector(model, theta_bar)


def one_step_estimator(fit: PenalizedFit, data: Dataset) -> SubmodelCoefficients:
    _, factor = _weighted_gram_factor(fit, data, fit.model)
    return SubmodelCoefficients.from_vector(fit.model, fit.submodel().as_vector() + _shrinkage_offset(fit, factor))


def selection_constraints(fit: PenalizedFit, data: Dataset,
                          theta_bar: Optional[SubmodelCoefficients] = None) -> SelectionEvent:
    model = fit.model
    if not model:
        raise EmptyModelError("No covariate selected; the selection event has no constraints")
    signs = fit.signs
    _, factor = _weighted_gram_factor(fit, data, model)
    A1 = -np.diag(signs)
    b1 = -signs * _shrinkage_offset(fit, factor)[1:]
    event = SelectionEvent(model, signs, A1, b1)

    if theta_bar is None:
        theta_bar = post_selection_estimator(fit, data)
    violation = float(np.max(A1 @ theta_bar.beta_M - b1))
    if violation > 0.0:
        logger.warning(f"Observed estimate violates its selection event by {violation:.2e} "
                       f"(lambda={fit.lam:g}, model={model})")
    return event


def polyhedral_bounds(A1: np.ndarray, b1: np.ndarray, cov_xi: np.ndarray, xi: np.ndarray,
                      beta: np.ndarray):
    """Truncation limits of xi^T beta implied by A1 beta <= b1.

    ``cov_xi`` is I_hat^{-1} xi. ``beta`` may be a single point or a stack of
    points along the first axis. Returns (v_minus, v_plus, v_zero) where
    v_zero is the smallest slack among rows that do not involve xi^T beta;
    rows whose coefficient is within 1e-12 * max|A1 c| of zero count as such.
    """
    xi = np.asarray(xi, dtype=float)
    c = cov_xi / float(xi @ cov_xi)
    beta = np.asarray(beta, dtype=float)
    r = beta - np.multiply.outer(beta @ xi, c)
    Ac = A1 @ c
    slack = b1 - r @ A1.T
    zero_tol = 1e-12 * float(np.max(np.abs(Ac), initial=0.0))
    negative = Ac < -zero_tol
    positive = Ac > zero_tol
    flat = ~(negative | positive)
    safe = np.where(flat, 1.0, Ac)
    ratio = slack / safe
    v_minus = np.max(np.where(negative, ratio, -np.inf), axis=-1)
    v_plus = np.min(np.where(positive, ratio, np.inf), axis=-1)
    v_zero = np.min(np.where(flat, slack, np.inf), axis=-1)
    return v_minus, v_plus, v_zero


def truncation_interval(est: PostSelectionEstimate, xi) -> TruncationInterval:
    xi = np.asarray(xi, dtype=float).reshape(-1)
    k = est.beta_bar.shape[0]
    if xi.shape[0] != k:
        raise InvalidContrastError(f"Contrast has length {xi.shape[0]}, model has {k} coefficients")
    if not np.all(np.isfinite(xi)) or not np.any(xi != 0.0):
        raise InvalidContrastError("Contrast must be finite and non-zero")
    try:
        factor = linalg.cho_factor(est.info_hat, lower=True)
    except linalg.LinAlgError:
        raise DegenerateDesignError("Estimated information for the selected coefficients is not positive definite")
    cov_xi = linalg.cho_solve(factor, xi)
    v_minus, v_plus, v_zero = polyhedral_bounds(est.event.A1, est.event.b1, cov_xi, xi, est.beta_bar)
    return TruncationInterval(
        v_minus=float(v_minus),
        v_plus=float(v_plus),
        v_zero_ok=bool(v_zero >= 0.0),
        contrast=xi,
        observed=float(xi @ est.beta_bar),
        variance=float(xi @ cov_xi),
    )


def build_post_selection_estimate(fit: PenalizedFit, data: Dataset, information: str = 'louis',
                                  include_score_term: bool = True) -> PostSelectionEstimate:
    """theta_bar, selection event and I_hat for a fit with a non-empty model."""
    theta_bar = post_selection_estimator(fit, data)
    event = selection_constraints(fit, data, theta_bar)
    estimate = information_for(fit, fit.submodel(), data, information, include_score_term)
    return PostSelectionEstimate(theta_bar, estimate.beta_information(), event, estimate)
