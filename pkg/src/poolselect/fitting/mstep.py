"""LASSO-penalized logistic M-step.

Maximizes sum_i {y_i log pi_i + (1 - y_i) log(1 - pi_i)} - lam * ||beta||_1 for
fractional responses y, intercept unpenalized. Each outer step forms the IRLS
quadratic at the current point and solves it by cyclic coordinate descent with
soft-thresholding; step halving keeps the penalized objective from decreasing.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from loguru import logger
from scipy.special import expit, logit

from ..config.parse_config import FitSettings
from ..model.dataset import Coefficients, Dataset
from ..model.likelihood import PI_EPS


@dataclass(frozen=True)
class MStepResult:
    coefficients: Coefficients
    converged: bool
    sweeps: int
    irls_steps: int
    objective: float


def soft_threshold(value: float, threshold: float) -> float:
    if value > threshold:
        return value - threshold
    if value < -threshold:
        return value + threshold
    return 0.0


def lambda_max(y_hat: np.ndarray, X: np.ndarray) -> float:
    """Smallest lam for which beta = 0 solves the M-step."""
    y_hat = np.asarray(y_hat, dtype=float)
    return float(np.max(np.abs(X.T @ (y_hat - y_hat.mean())))) if X.shape[1] else 0.0


def penalized_objective(X: np.ndarray, y: np.ndarray, lam: float, alpha: float, beta: np.ndarray) -> float:
    eta = alpha + X @ beta
    # log pi = -log(1 + e^-eta), log(1 - pi) = -log(1 + e^eta)
    loglik = -(y * np.logaddexp(0.0, -eta) + (1.0 - y) * np.logaddexp(0.0, eta)).sum()
    return float(loglik - lam * np.abs(beta).sum())


def _weighted_lasso(X: np.ndarray, working: np.ndarray, w: np.ndarray, lam: float,
                    alpha: float, beta: np.ndarray, tolerance: float,
                    max_sweeps: int) -> Tuple[float, np.ndarray, int]:
    """Coordinate descent for 1/2 sum w (working - alpha - X beta)^2 + lam ||beta||_1."""
    beta = beta.copy()
    residual = working - alpha - X @ beta
    weight_total = w.sum()
    curvature = w @ (X * X)
    sweeps = 0
    while sweeps < max_sweeps:
        sweeps += 1
        shift = (w @ residual) / weight_total
        alpha += shift
        residual -= shift
        max_change = abs(shift)
        for j in range(X.shape[1]):
            if curvature[j] <= 0.0:
                continue
            column = X[:, j]
            old = beta[j]
            rho = column @ (w * residual) + curvature[j] * old
            new = soft_threshold(rho, lam) / curvature[j]
            if new != old:
                residual -= column * (new - old)
                beta[j] = new
                max_change = max(max_change, abs(new - old))
        if max_change < tolerance:
            break
    return alpha, beta, sweeps


def solve_penalized_logistic(X: np.ndarray, y: np.ndarray, lam: float,
                             warm_start: Optional[Coefficients] = None,
                             settings: Optional[FitSettings] = None) -> MStepResult:
    settings = settings or FitSettings()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if lam < 0 or not np.isfinite(lam):
        raise ValueError(f"Penalty must be a finite non-negative number, got {lam}")

    if warm_start is None:
        alpha = float(logit(np.clip(y.mean(), 1e-6, 1 - 1e-6)))
        beta = np.zeros(X.shape[1])
    else:
        alpha, beta = warm_start.alpha, warm_start.beta.copy()

    objective = penalized_objective(X, y, lam, alpha, beta)
    sweeps = 0
    irls_steps = 0
    converged = False
    while sweeps < settings.cd_max_sweeps:
        irls_steps += 1
        eta = alpha + X @ beta
        pi = np.clip(expit(eta), PI_EPS, 1.0 - PI_EPS)
        w = np.maximum(pi * (1.0 - pi), settings.weight_floor)
        working = eta + (y - pi) / w

        new_alpha, new_beta, used = _weighted_lasso(
            X, working, w, lam, alpha, beta, settings.cd_tolerance, settings.cd_max_sweeps - sweeps)
        sweeps += used

        direction_alpha, direction_beta = new_alpha - alpha, new_beta - beta
        new_objective = penalized_objective(X, y, lam, new_alpha, new_beta)
        step = 1.0
        while new_objective < objective - 1e-12 * (1.0 + abs(objective)) and step > 1e-8:
            step *= 0.5
            new_alpha = alpha + step * direction_alpha
            new_beta = beta + step * direction_beta
            new_objective = penalized_objective(X, y, lam, new_alpha, new_beta)

        change = max(abs(new_alpha - alpha), float(np.max(np.abs(new_beta - beta), initial=0.0)))
        alpha, beta, objective = new_alpha, new_beta, new_objective
        if change < settings.cd_tolerance:
            converged = True
            break

    if not converged:
        logger.warning(f"M-step stopped after {sweeps} coordinate sweeps without reaching "
                       f"tolerance {settings.cd_tolerance:g} (lambda={lam:g})")
    return MStepResult(Coefficients(alpha, beta), converged, sweeps, irls_steps, objective)


def m_step_penalized(y_hat: np.ndarray, data: Dataset, lam: float,
                     warm_start: Optional[Coefficients] = None,
                     settings: Optional[FitSettings] = None) -> Coefficients:
    """Penalized logistic maximizer for the imputed responses ``y_hat``."""
    return solve_penalized_logistic(data.X, y_hat, lam, warm_start, settings).coefficients
