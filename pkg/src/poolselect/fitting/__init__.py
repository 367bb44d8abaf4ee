from .em import LambdaChoice, PenalizedFit, choose_lambda, em_fit, initial_coefficients
from .estep import e_step_group, e_step_individual, pool_posterior_scale
from .kkt import KktReport, kkt_check
from .mstep import MStepResult, lambda_max, m_step_penalized, solve_penalized_logistic

__all__ = [
    'LambdaChoice',
    'PenalizedFit',
    'choose_lambda',
    'em_fit',
    'initial_coefficients',
    'e_step_group',
    'e_step_individual',
    'pool_posterior_scale',
    'KktReport',
    'kkt_check',
    'MStepResult',
    'lambda_max',
    'm_step_penalized',
    'solve_penalized_logistic',
]
