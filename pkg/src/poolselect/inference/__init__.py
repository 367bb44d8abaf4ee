from .information import (
    ConditionalCrossMoments,
    InformationEstimate,
    complete_data_information,
    conditional_cross_moments,
    louis_information,
    sandwich_covariance,
)
from .intervals import (
    IntervalEstimate,
    naive_ci,
    selective_ci,
    selective_intervals,
    selective_pivot,
    split_inference,
    wald_interval,
)
from .selection import (
    PostSelectionEstimate,
    SelectionEvent,
    TruncationInterval,
    build_post_selection_estimate,
    post_selection_estimator,
    selection_constraints,
    truncation_interval,
)
from .truncnorm import TruncatedGaussianSpec, truncated_normal_cdf

__all__ = [
    'ConditionalCrossMoments',
    'InformationEstimate',
    'complete_data_information',
    'conditional_cross_moments',
    'louis_information',
    'sandwich_covariance',
    'IntervalEstimate',
    'naive_ci',
    'selective_ci',
    'selective_intervals',
    'selective_pivot',
    'split_inference',
    'wald_interval',
    'PostSelectionEstimate',
    'SelectionEvent',
    'TruncationInterval',
    'build_post_selection_estimate',
    'post_selection_estimator',
    'selection_constraints',
    'truncation_interval',
    'TruncatedGaussianSpec',
    'truncated_normal_cdf',
]
