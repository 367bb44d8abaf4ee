"""Observed-information estimators for the selected submodel.

Louis' identity gives the observed information as the complete-data
information minus the conditional second moment of the complete-data score.
For pooled tests the conditional moments couple members of the same pool;
they are held in factored form and never expanded to an n x n matrix.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from loguru import logger
from scipy import linalg

from ..errors import DegenerateDesignError
from ..fitting.em import PenalizedFit
from ..fitting.estep import pool_posterior_scale
from ..model.dataset import Dataset, SubmodelCoefficients
from ..model.likelihood import logistic_means
from ..utils.timing import measure_inference


def submodel_design(data: Dataset, model) -> np.ndarray:
    """[1, X_M]."""
    return np.column_stack((np.ones(data.n), data.X[:, list(model)]))


def _symmetrize(matrix: np.ndarray) -> np.ndarray:
    return 0.5 * (matrix + matrix.T)


def is_positive_definite(matrix: np.ndarray) -> bool:
    if matrix.size == 0:
        return True
    try:
        linalg.cho_factor(matrix, lower=True)
    except linalg.LinAlgError:
        return False
    return bool(np.all(np.isfinite(matrix)))


def cholesky_inverse(matrix: np.ndarray, what: str) -> np.ndarray:
    """Inverse of a symmetric positive-definite matrix, or DegenerateDesignError."""
    if matrix.size == 0:
        return matrix.copy()
    try:
        factor = linalg.cho_factor(matrix, lower=True)
    except linalg.LinAlgError:
        raise DegenerateDesignError(f"{what} is not positive definite")
    return _symmetrize(linalg.cho_solve(factor, np.eye(matrix.shape[0])))


@dataclass(frozen=True, eq=False)
class InformationEstimate:
    """Information (Louis) or covariance (sandwich) for (alpha, beta_M).

    ``matrix`` is (|M|+1) x (|M|+1) with the intercept first.
    """

    matrix: np.ndarray
    method: str
    model: Tuple[int, ...]
    kind: str = 'information'

    @property
    def block(self) -> np.ndarray:
        """Lower |M| x |M| block of ``matrix``."""
        return self.matrix[1:, 1:]

    @property
    def degenerate(self) -> bool:
        return not is_positive_definite(self.matrix)

    def beta_information(self) -> np.ndarray:
        """The matrix I_hat whose inverse is the working covariance of beta_bar."""
        if self.kind == 'information':
            return self.block
        return cholesky_inverse(self.block, f"{self.method} covariance block")

    def beta_covariance(self) -> np.ndarray:
        """Covariance of beta with the intercept profiled out."""
        if self.kind == 'covariance':
            return self.block
        return cholesky_inverse(self.matrix, f"{self.method} information")[1:, 1:]


@dataclass(frozen=True, eq=False)
class ConditionalCrossMoments:
    """E[(Y - pi)(Y - pi)^T | Z] in factored form.

    Across pools the entries are products of ``residual``; on the diagonal the
    extra term is Y_hat(1 - Y_hat); within a pool the extra term for i != k is
    (c_j - c_j^2) pi_i pi_k.
    """

    pi: np.ndarray
    y_hat: np.ndarray
    scale: np.ndarray
    membership: np.ndarray
    pool_sizes: np.ndarray

    @property
    def residual(self) -> np.ndarray:
        return self.y_hat - self.pi

    def diagonal(self) -> np.ndarray:
        return (1.0 - 2.0 * self.pi) * self.y_hat + self.pi ** 2

    def conditional_covariance_form(self, D: np.ndarray) -> np.ndarray:
        """D^T Cov(Y | Z) D."""
        form = D.T @ ((self.y_hat * (1.0 - self.y_hat))[:, None] * D)
        shared = self.pool_sizes[self.membership] > 1
        if np.any(shared):
            pool_weight = self.scale - self.scale ** 2
            rows = np.flatnonzero(shared)
            weighted = self.pi[rows, None] * D[rows]
            sums = np.zeros((self.scale.size, D.shape[1]))
            np.add.at(sums, self.membership[rows], weighted)
            form += sums.T @ (pool_weight[:, None] * sums)
            form -= weighted.T @ (pool_weight[self.membership[rows], None] * weighted)
        return _symmetrize(form)

    def quadratic_form(self, D: np.ndarray) -> np.ndarray:
        """D^T E[(Y - pi)(Y - pi)^T | Z] D."""
        score = D.T @ self.residual
        return self.conditional_covariance_form(D) + np.outer(score, score)

    def dense(self) -> np.ndarray:
        """Entrywise n x n matrix; for small problems and checks only."""
        residual = self.residual
        matrix = np.outer(residual, residual)
        for j in np.flatnonzero(self.pool_sizes > 1):
            members = np.flatnonzero(self.membership == j)
            pi, y = self.pi[members], self.y_hat[members]
            joint = self.scale[j] * np.outer(pi, pi)
            block = joint - np.outer(y, pi) - np.outer(pi, y) + np.outer(pi, pi)
            matrix[np.ix_(members, members)] = block
        np.fill_diagonal(matrix, self.diagonal())
        return matrix


def conditional_cross_moments(theta_M: SubmodelCoefficients, data: Dataset) -> ConditionalCrossMoments:
    pi = logistic_means(theta_M.expand(data.p), data.X)
    scale = pool_posterior_scale(pi, data)
    y_hat = np.clip(pi * scale[data.membership], 0.0, 1.0)
    moments = ConditionalCrossMoments(pi, y_hat, scale, data.membership, data.pool_sizes)
    if np.any(moments.diagonal() < -1e-12):
        logger.warning("Negative diagonal in conditional cross moments")
    return moments


def complete_data_information(theta_M: SubmodelCoefficients, data: Dataset) -> np.ndarray:
    """sum_i pi_i (1 - pi_i) [1 x_i^T; x_i x_i x_i^T] over the selected columns."""
    D = submodel_design(data, theta_M.model)
    pi = logistic_means(theta_M.expand(data.p), data.X)
    return _symmetrize(D.T @ ((pi * (1.0 - pi))[:, None] * D))


@measure_inference
def louis_information(fit: PenalizedFit, theta_M: SubmodelCoefficients, data: Dataset,
                      include_score_term: bool = True) -> InformationEstimate:
    """Observed information of (alpha, beta_M) at theta_M.

    With ``include_score_term`` the conditional score mean is added back, so the
    result equals the negative Hessian of the observed log-likelihood at any
    theta_M. Without it, the complete-data information minus E[S S^T | Z] is
    returned; the two agree at an unpenalized stationary point.
    """
    if not fit.converged:
        logger.warning(f"Louis information computed from an unconverged fit (lambda={fit.lam:g})")
    D = submodel_design(data, theta_M.model)
    moments = conditional_cross_moments(theta_M, data)
    info_c = complete_data_information(theta_M, data)
    if include_score_term:
        matrix = info_c - moments.conditional_covariance_form(D)
    else:
        matrix = info_c - moments.quadratic_form(D)
    estimate = InformationEstimate(_symmetrize(matrix), 'louis', theta_M.model, 'information')
    if estimate.degenerate:
        logger.warning(f"Louis information is not positive definite for model {theta_M.model}")
    return estimate


@measure_inference
def sandwich_covariance(fit: PenalizedFit, theta_M: SubmodelCoefficients, data: Dataset) -> InformationEstimate:
    """I_c^{-1} (sum_i (Y_hat_i - pi_i)^2 [1 x; x x x^T]) I_c^{-1}."""
    D = submodel_design(data, theta_M.model)
    bread = cholesky_inverse(complete_data_information(theta_M, data), "complete-data information")
    moments = conditional_cross_moments(theta_M, data)
    meat = D.T @ ((moments.residual ** 2)[:, None] * D)
    return InformationEstimate(_symmetrize(bread @ meat @ bread.T), 'sandwich', theta_M.model, 'covariance')


def information_for(fit: PenalizedFit, theta_M: SubmodelCoefficients, data: Dataset,
                    method: str = 'louis', include_score_term: bool = True) -> InformationEstimate:
    if method == 'louis':
        return louis_information(fit, theta_M, data, include_score_term=include_score_term)
    if method == 'sandwich':
        return sandwich_covariance(fit, theta_M, data)
    raise ValueError(f"Unknown information method: {method}")
