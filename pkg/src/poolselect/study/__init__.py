from .dgp import DgpConfig, SimulatedData, default_theta, lambda_grid, pool_individual_data, simulate_dataset
from .metrics import binomial_band, covers, type_i_error_rate
from .runner import (
    METHODS,
    LambdaSummary,
    StudyReport,
    misspecification_study,
    request_shutdown,
    reset_shutdown,
    run_study,
)

__all__ = [
    'DgpConfig',
    'SimulatedData',
    'default_theta',
    'lambda_grid',
    'pool_individual_data',
    'simulate_dataset',
    'binomial_band',
    'covers',
    'type_i_error_rate',
    'METHODS',
    'LambdaSummary',
    'StudyReport',
    'misspecification_study',
    'request_shutdown',
    'reset_shutdown',
    'run_study',
]
