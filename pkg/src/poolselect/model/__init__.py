from .dataset import Coefficients, Dataset, SubmodelCoefficients
from .likelihood import (
    PI_EPS,
    aic_bic,
    logistic_mean,
    logistic_means,
    observed_loglik,
    pool_negative_prob,
    pool_negative_probs,
)

__all__ = [
    'Coefficients',
    'Dataset',
    'SubmodelCoefficients',
    'PI_EPS',
    'aic_bic',
    'logistic_mean',
    'logistic_means',
    'observed_loglik',
    'pool_negative_prob',
    'pool_negative_probs',
]
