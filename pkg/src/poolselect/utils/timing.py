"""
Timing measurement utilities for fitting and inference routines.
Provides a decorator and a JSON-lines store for profiling Monte Carlo studies.
"""

import functools
import json
import os
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Dict, Optional

from loguru import logger


class FileTimingStorage:
    """Appends timing measurements to a JSON-lines file."""

    def __init__(self, file_path: str = "logs/timing_measurements.jsonl"):
        self.file_path = Path(file_path)
        self.file_path.parent.mkdir(parents=True, exist_ok=True)

    def store_timing(self, measurement: Dict[str, Any]) -> None:
        try:
            with open(self.file_path, 'a') as f:
                f.write(json.dumps(measurement) + '\n')
        except OSError as e:
            logger.error(f"Failed to store timing measurement: {e}")

    def read_all(self):
        if not self.file_path.exists():
            return []
        with open(self.file_path) as f:
            return [json.loads(line) for line in f if line.strip()]


class TimingManager:
    """Manages timing measurement configuration and storage."""

    def __init__(self):
        self.enabled = self._get_timing_enabled()
        self.storage = self._create_storage() if self.enabled else None

    def _get_timing_enabled(self) -> bool:
        """Check if timing measurement is enabled via environment or config."""
        env_enabled = os.getenv('POOLSELECT_TIMING_ENABLED', '').lower()
        if env_enabled in ('true', '1', 'yes', 'on'):
            return True
        elif env_enabled in ('false', '0', 'no', 'off'):
            return False

        from ..config.parse_config import ConfigParser
        for config_file in ('poolselect.json', 'poolselect.yaml'):
            if os.path.exists(config_file):
                try:
                    timing_config = ConfigParser(config_file).get('timing', {})
                except Exception as e:
                    logger.debug(f"Ignoring unreadable {config_file}: {e}")
                    continue
                if isinstance(timing_config, dict):
                    return bool(timing_config.get('enabled', False))
                if isinstance(timing_config, bool):
                    return timing_config
        return False

    def _create_storage(self) -> FileTimingStorage:
        output_path = os.getenv('POOLSELECT_TIMING_FILE', 'logs/timing_measurements.jsonl')
        return FileTimingStorage(output_path)

    def record_timing(self, function_name: str, duration_ms: float,
                      context: Optional[Dict[str, Any]] = None) -> None:
        if not self.enabled or not self.storage:
            return

        measurement = {
            'timestamp': datetime.now(timezone.utc).isoformat(),
            'function': function_name,
            'duration_ms': duration_ms,
            'process_id': os.getpid(),
            'context': context or {}
        }
        self.storage.store_timing(measurement)


_timing_manager = None


def get_timing_manager() -> TimingManager:
    """Get the per-process timing manager instance."""
    global _timing_manager
    if _timing_manager is None:
        _timing_manager = TimingManager()
    return _timing_manager


def reset_timing_manager() -> None:
    """Drop the cached manager so the next call re-reads the environment."""
    global _timing_manager
    _timing_manager = None


def _describe(value):
    if hasattr(value, 'shape'):
        return f"array{tuple(value.shape)}"
    if isinstance(value, (str, int, float, bool)):
        return value
    for attr in ('n', 'lam', 'replicate'):
        if hasattr(value, attr) and isinstance(getattr(value, attr), (int, float)):
            return f"{type(value).__name__}({attr}={getattr(value, attr)})"
    return type(value).__name__


def measure_timing(function_name: Optional[str] = None,
                   include_args: bool = False,
                   include_result: bool = False):
    """
    Decorator to measure execution time of functions.

    Args:
        function_name: Override function name in measurements
        include_args: Include a compact description of the arguments
        include_result: Include the result type in context
    """
    def decorator(func: Callable) -> Callable:
        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            timing_manager = get_timing_manager()
            if not timing_manager.enabled:
                return func(*args, **kwargs)

            context: Dict[str, Any] = {'module': func.__module__}
            if include_args:
                context['args'] = [_describe(a) for a in args]
                context['kwargs'] = {k: _describe(v) for k, v in kwargs.items()}

            start_time = time.perf_counter()
            try:
                result = func(*args, **kwargs)
                if include_result:
                    context['result_type'] = type(result).__name__
                    if hasattr(result, 'converged'):
                        context['converged'] = bool(result.converged)
                return result
            finally:
                duration_ms = (time.perf_counter() - start_time) * 1000
                measured_function_name = function_name or f"{func.__module__}.{func.__name__}"
                timing_manager.record_timing(measured_function_name, duration_ms, context)

        return wrapper
    return decorator


def measure_em_fit(func: Callable) -> Callable:
    """Decorator for penalized EM fits."""
    return measure_timing("em_fit", include_args=True, include_result=True)(func)


def measure_inference(func: Callable) -> Callable:
    """Decorator for information and interval computations."""
    return measure_timing("inference", include_args=True)(func)


def measure_replicate(func: Callable) -> Callable:
    """Decorator for one Monte Carlo replicate."""
    return measure_timing("replicate", include_args=True)(func)
