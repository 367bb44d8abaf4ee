"""Logistic means, pooled-test probabilities and the observed-data log-likelihood."""

from typing import Tuple

import numpy as np
from scipy.special import expit

from .dataset import Coefficients, Dataset, SubmodelCoefficients

PI_EPS = 1e-10


def logistic_means(theta: Coefficients, X: np.ndarray) -> np.ndarray:
    """Vector of pi_i(theta) for the rows of X, clamped to [PI_EPS, 1 - PI_EPS]."""
    eta = theta.alpha + np.asarray(X, dtype=float) @ theta.beta
    return np.clip(expit(eta), PI_EPS, 1.0 - PI_EPS)


def logistic_mean(theta: Coefficients, x) -> float:
    x = np.asarray(x, dtype=float).reshape(1, -1)
    return float(logistic_means(theta, x)[0])


def pool_products(pi: np.ndarray, data: Dataset) -> np.ndarray:
    """prod_{i in pool j} (1 - pi_i) for every pool, accumulated in log space."""
    return np.exp(np.bincount(data.membership, weights=np.log1p(-pi), minlength=data.n_pools))


def negative_probs_from_means(pi: np.ndarray, data: Dataset) -> np.ndarray:
    """P(Z_j = 0) for every pool given individual means pi."""
    all_negative = pool_products(pi, data)
    return (1.0 - data.se) * (1.0 - all_negative) + data.sp * all_negative


def pool_negative_probs(theta: Coefficients, data: Dataset) -> np.ndarray:
    return negative_probs_from_means(logistic_means(theta, data.X), data)


def pool_negative_prob(theta: Coefficients, data: Dataset, j: int) -> float:
    """P_theta(Z_j = 0) for the 0-based pool index j."""
    if not 0 <= j < data.n_pools:
        raise IndexError(f"Pool index {j} out of range for {data.n_pools} pools")
    pool = data.pools[j]
    pi = logistic_means(theta, data.X[pool])
    all_negative = float(np.exp(np.log1p(-pi).sum()))
    return (1.0 - data.se) * (1.0 - all_negative) + data.sp * all_negative


def loglik_from_means(pi: np.ndarray, data: Dataset) -> float:
    p0 = negative_probs_from_means(pi, data)
    p1 = 1.0 - p0
    with np.errstate(divide='ignore'):
        terms = np.where(data.z == 1, np.log(p1), np.log(p0))
    return float(terms.sum())


def observed_loglik(theta: Coefficients, data: Dataset) -> float:
    """Sum over pools of z_j log P(Z_j=1) + (1 - z_j) log P(Z_j=0)."""
    return loglik_from_means(logistic_means(theta, data.X), data)


def penalized_observed_objective(theta: Coefficients, data: Dataset, lam: float) -> float:
    return observed_loglik(theta, data) - lam * theta.l1_norm()


def aic_bic(theta_M: SubmodelCoefficients, data: Dataset) -> Tuple[float, float]:
    """Information criteria counting |M| + 1 parameters (intercept included)."""
    loglik = observed_loglik(theta_M.expand(data.p), data)
    k = theta_M.size + 1
    return -2.0 * loglik + 2.0 * k, -2.0 * loglik + np.log(data.n) * k
