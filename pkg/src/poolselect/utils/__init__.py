"""
Utility modules for poolselect.
"""

from .timing import (
    measure_timing,
    measure_em_fit,
    measure_inference,
    measure_replicate,
    get_timing_manager
)

__all__ = [
    'measure_timing',
    'measure_em_fit',
    'measure_inference',
    'measure_replicate',
    'get_timing_manager'
]
