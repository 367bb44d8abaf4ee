"""E-steps: posterior means of latent true statuses given the observed tests."""

import numpy as np

from ..errors import DatasetValidationError
from ..model.dataset import Coefficients, Dataset
from ..model.likelihood import logistic_means, negative_probs_from_means


def pool_posterior_scale(pi: np.ndarray, data: Dataset) -> np.ndarray:
    """Per-pool factor c_j with E[Y_i | Z_j] = c_j * pi_i for i in pool j.

    c_j = Se^z (1 - Se)^(1 - z) / P(Z_j = z_j). Single-stage pooling only;
    other testing protocols change this factor and nothing else.
    """
    p0 = negative_probs_from_means(pi, data)
    positive = data.z == 1
    numerator = np.where(positive, data.se, 1.0 - data.se)
    denominator = np.where(positive, 1.0 - p0, p0)
    return numerator / denominator


def posterior_from_means(pi: np.ndarray, data: Dataset) -> np.ndarray:
    scale = pool_posterior_scale(pi, data)
    return np.clip(pi * scale[data.membership], 0.0, 1.0)


def e_step_group(theta: Coefficients, data: Dataset) -> np.ndarray:
    """E_theta[Y_i | Z_j] for every individual i in pool j."""
    return posterior_from_means(logistic_means(theta, data.X), data)


def e_step_individual(theta: Coefficients, data: Dataset) -> np.ndarray:
    """Individual-testing E-step: the singleton-pool case of :func:`e_step_group`."""
    if not data.is_individual:
        raise DatasetValidationError(
            f"Individual E-step needs singleton pools; largest pool has {int(data.pool_sizes.max())} members")
    return e_step_group(theta, data)
