"""Data-generating process for the Monte Carlo study and the lambda grids."""

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from ..errors import ConfigurationError, DatasetValidationError
from ..model.dataset import Coefficients, Dataset
from ..model.likelihood import logistic_means

SeedLike = Union[int, np.random.SeedSequence]

DEFAULT_GRID_SIZE = 25
GRID_BOUNDS = {1000: (1.0, 7.0), 2000: (0.5, 10.0)}


def default_theta(p: int = 10) -> Coefficients:
    if p < 3:
        raise ConfigurationError("The default coefficients need p >= 3")
    beta = np.zeros(p)
    beta[:3] = (2.0, 1.0, 1.0)
    return Coefficients(-5.0, beta)


@dataclass(frozen=True, eq=False)
class DgpConfig:
    """Standard normal covariates, logistic outcomes, random pools of size m."""

    n: int = 1000
    p: int = 10
    theta_true: Coefficients = field(default_factory=default_theta)
    pool_size: int = 1
    se: float = 0.95
    sp: float = 0.97
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.p < 1:
            raise ConfigurationError(f"n and p must be positive, got n={self.n}, p={self.p}")
        if self.pool_size < 1:
            raise ConfigurationError(f"Pool size must be at least 1, got {self.pool_size}")
        if self.theta_true.p != self.p:
            raise ConfigurationError(f"theta_true has {self.theta_true.p} slopes, expected p={self.p}")
        for name, value in (('se', self.se), ('sp', self.sp)):
            if not 0.0 < value <= 1.0:
                raise ConfigurationError(f"{name} must lie in (0, 1], got {value}")

    def to_dict(self) -> dict:
        return {
            'n': self.n,
            'p': self.p,
            'theta_true': self.theta_true.as_vector().tolist(),
            'pool_size': self.pool_size,
            'se': self.se,
            'sp': self.sp,
            'seed': self.seed,
        }


@dataclass(frozen=True, eq=False)
class SimulatedData:
    dataset: Dataset
    y_true: np.ndarray
    pool_truth: np.ndarray


def contiguous_pools(n: int, pool_size: int) -> Tuple[np.ndarray, ...]:
    """Consecutive blocks of ``pool_size`` rows; the last block may be smaller."""
    return tuple(np.arange(start, min(start + pool_size, n)) for start in range(0, n, pool_size))


def draw_pool_outcomes(pool_truth: np.ndarray, se: float, sp: float, rng: np.random.Generator) -> np.ndarray:
    positive_prob = se * pool_truth + (1.0 - sp) * (1 - pool_truth)
    return (rng.random(pool_truth.shape[0]) < positive_prob).astype(np.int64)


def simulate_dataset(cfg: DgpConfig, seed: Optional[SeedLike] = None) -> SimulatedData:
    """Draw one dataset; ``seed`` overrides ``cfg.seed``.

    Covariate rows are exchangeable, so assigning consecutive rows to a pool is
    a uniformly random partition and keeps CSV row order equal to pool order.
    """
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    X = rng.standard_normal((cfg.n, cfg.p))
    pi = logistic_means(cfg.theta_true, X)
    y = (rng.random(cfg.n) < pi).astype(np.int64)
    pools = contiguous_pools(cfg.n, cfg.pool_size)
    pool_truth = np.array([y[pool].max() for pool in pools], dtype=np.int64)
    z = draw_pool_outcomes(pool_truth, cfg.se, cfg.sp, rng)
    return SimulatedData(Dataset(X, pools, z, cfg.se, cfg.sp), y, pool_truth)


def pool_individual_data(data: Dataset, pool_size: int, se: float, sp: float, seed: SeedLike) -> Dataset:
    """Randomly group individually tested subjects and draw one pooled outcome per group.

    Individual outcomes are treated as true statuses. Rows are reordered so
    that each new pool occupies consecutive rows.
    """
    if not data.is_individual:
        raise DatasetValidationError("Artificial pooling needs individually tested data")
    if pool_size < 1:
        raise ConfigurationError(f"Pool size must be at least 1, got {pool_size}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(data.n)
    statuses = data.z_individual()[order]
    pools = contiguous_pools(data.n, pool_size)
    pool_truth = np.array([statuses[pool].max() for pool in pools], dtype=np.int64)
    z = draw_pool_outcomes(pool_truth, se, sp, rng)
    return Dataset(data.X[order], pools, z, se, sp, covariate_names=data.covariate_names)


def lambda_grid(n: int, size: int = DEFAULT_GRID_SIZE,
                bounds: Optional[Sequence[float]] = None) -> np.ndarray:
    """Log-spaced penalties over the standard range for ``n`` or over ``bounds``."""
    if bounds is None:
        if n not in GRID_BOUNDS:
            raise ConfigurationError(
                f"No default lambda range for n={n}; supply bounds (known n: {sorted(GRID_BOUNDS)})")
        bounds = GRID_BOUNDS[n]
    low, high = float(bounds[0]), float(bounds[1])
    if not 0.0 < low <= high:
        raise ConfigurationError(f"Lambda bounds must satisfy 0 < low <= high, got ({low}, {high})")
    if size < 1:
        raise ConfigurationError(f"Grid size must be positive, got {size}")
    if size == 1:
        return np.array([low])
    return np.geomspace(low, high, size)
