import json
import os
from dataclasses import dataclass, fields
from pathlib import Path

import psutil
import yaml

from ..errors import ConfigurationError


@dataclass(frozen=True)
class FitSettings:
    """Numerical controls for the EM / coordinate-descent solver."""

    em_tolerance: float = 1e-6
    em_max_iterations: int = 500
    cd_tolerance: float = 1e-10
    cd_max_sweeps: int = 10_000
    weight_floor: float = 1e-10
    ascent_slack: float = 1e-8


DEFAULT_STUDY_SETTINGS = {
    'replicates': 500,
    'level': 0.95,
    'seed': 20240601,
    'information': 'louis',
}


class ConfigParser:
    def __init__(self, config_file=None):
        self.config_file = config_file
        self.config = {}
        if config_file is not None:
            self.parse_config()

    def parse_config(self):
        path = Path(self.config_file)
        with open(path, 'r') as file:
            if path.suffix.lower() in ('.yaml', '.yml'):
                loaded = yaml.safe_load(file)
            else:
                loaded = json.load(file)
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ConfigurationError(f"Config file {path} must contain a mapping at top level")
        self.config = loaded

    def get_config(self):
        return self.config

    def get(self, key, default=None):
        return self.config.get(key, default)

    def set(self, key, value):
        self.config[key] = value

    def remove(self, key):
        if key in self.config:
            del self.config[key]

    def has(self, key):
        return key in self.config

    def get_thread_count(self):
        """Get the number of worker processes used for Monte Carlo replicates.

        Priority order:
        1. Environment variable POOLSELECT_THREADS
        2. Config file study.threads
        3. Default: physical core count (at least 1)
        """
        env_threads = os.getenv('POOLSELECT_THREADS')
        if env_threads:
            try:
                threads = int(env_threads)
                if threads > 0:
                    return threads
            except ValueError:
                pass

        study_config = self.get('study', {})
        if isinstance(study_config, dict):
            threads = study_config.get('threads')
            if threads is not None:
                try:
                    threads = int(threads)
                    if threads > 0:
                        return threads
                except (ValueError, TypeError):
                    pass

        cores = psutil.cpu_count(logical=False) or os.cpu_count() or 1
        return max(1, cores)

    def get_study_settings(self):
        """Get study configuration merged over the defaults."""
        result = DEFAULT_STUDY_SETTINGS.copy()
        result['threads'] = self.get_thread_count()

        study_config = self.get('study', {})
        if isinstance(study_config, dict):
            for key, value in study_config.items():
                if key != 'threads':
                    result[key] = value
        elif study_config:
            raise ConfigurationError("'study' section must be a mapping")

        if int(result['replicates']) < 1:
            raise ConfigurationError(f"study.replicates must be >= 1, got {result['replicates']}")
        if not 0.0 < float(result['level']) < 1.0:
            raise ConfigurationError(f"study.level must lie in (0, 1), got {result['level']}")
        if result['information'] not in ('louis', 'sandwich'):
            raise ConfigurationError(f"study.information must be 'louis' or 'sandwich', got {result['information']}")
        return result

    def get_fit_settings(self):
        """Build FitSettings from the optional 'fit' section."""
        fit_config = self.get('fit', {})
        if not isinstance(fit_config, dict):
            raise ConfigurationError("'fit' section must be a mapping")
        known = {f.name: f.type for f in fields(FitSettings)}
        unknown = set(fit_config) - set(known)
        if unknown:
            raise ConfigurationError(f"Unknown fit settings: {sorted(unknown)}")
        values = {}
        for name, value in fit_config.items():
            caster = int if name.endswith(('iterations', 'sweeps')) else float
            try:
                values[name] = caster(value)
            except (TypeError, ValueError):
                raise ConfigurationError(f"fit.{name} must be numeric, got {value!r}")
        return FitSettings(**values)


def resolve_config_file(cli_path=None):
    """Config path from --config, else POOLSELECT_CONFIG, else None."""
    if cli_path:
        return cli_path
    return os.getenv('POOLSELECT_CONFIG')
