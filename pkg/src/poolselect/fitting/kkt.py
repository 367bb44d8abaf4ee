"""Stationarity diagnostics for a penalized fit."""

from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from ..model.dataset import Dataset
from .em import PenalizedFit


@dataclass(frozen=True)
class KktReport:
    """Weighted residual inner products at the returned fit.

    With residual = alpha + X_M beta_M - z_work, active entries should equal
    -lam * sign(beta_j), inactive magnitudes should not exceed lam and the
    intercept entry should vanish.
    """

    active_residuals: Dict[int, float]
    inactive_bounds: Dict[int, float]
    intercept_residual: float
    tolerance: float
    lam: float
    signs: Dict[int, int]

    @property
    def stationarity_gap(self) -> float:
        gaps = [abs(value + self.lam * self.signs[j]) for j, value in self.active_residuals.items()]
        return max(gaps, default=0.0)

    @property
    def max_inactive(self) -> float:
        return max(self.inactive_bounds.values(), default=0.0)

    @property
    def ok(self) -> bool:
        return (abs(self.intercept_residual) <= self.tolerance
                and self.stationarity_gap <= self.tolerance
                and self.max_inactive <= self.lam + self.tolerance)


def kkt_check(fit: PenalizedFit, data: Dataset, tolerance: Optional[float] = None) -> KktReport:
    if tolerance is None:
        tolerance = 1e-6 * data.n
    theta = fit.theta_hat
    residual = theta.alpha + data.X @ theta.beta - fit.working_response
    weighted = fit.weights * residual
    gradient = data.X.T @ weighted
    model = set(fit.model)
    active = {j: float(gradient[j]) for j in sorted(model)}
    inactive = {j: float(abs(gradient[j])) for j in range(data.p) if j not in model}
    signs = {j: int(np.sign(theta.beta[j])) for j in sorted(model)}
    return KktReport(active, inactive, float(weighted.sum()), float(tolerance), fit.lam, signs)
