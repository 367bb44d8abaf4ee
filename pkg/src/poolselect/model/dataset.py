"""Immutable value objects: observed pooled-testing data and logistic coefficients."""

import hashlib
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from ..errors import DatasetValidationError


def _frozen(array: np.ndarray) -> np.ndarray:
    array.flags.writeable = False
    return array


def _check_accuracy(name: str, value: float) -> float:
    value = float(value)
    if not np.isfinite(value) or not 0.0 < value <= 1.0:
        raise DatasetValidationError(f"{name} must lie in (0, 1], got {value}")
    return value


@dataclass(frozen=True)
class Coefficients:
    """Intercept ``alpha`` and covariate effects ``beta`` of the logistic model."""

    alpha: float
    beta: np.ndarray

    def __post_init__(self):
        beta = _frozen(np.array(self.beta, dtype=float).reshape(-1))
        alpha = float(self.alpha)
        if not np.isfinite(alpha) or not np.all(np.isfinite(beta)):
            raise ValueError("Coefficients must be finite")
        object.__setattr__(self, 'alpha', alpha)
        object.__setattr__(self, 'beta', beta)

    @classmethod
    def zeros(cls, p: int, alpha: float = 0.0) -> "Coefficients":
        return cls(alpha, np.zeros(p))

    @classmethod
    def from_vector(cls, vector: Sequence[float]) -> "Coefficients":
        vector = np.asarray(vector, dtype=float)
        return cls(vector[0], vector[1:])

    @property
    def p(self) -> int:
        return self.beta.shape[0]

    def as_vector(self) -> np.ndarray:
        return np.concatenate(([self.alpha], self.beta))

    def support(self) -> Tuple[int, ...]:
        return tuple(int(j) for j in np.flatnonzero(self.beta))

    def l1_norm(self) -> float:
        return float(np.abs(self.beta).sum())

    def restrict(self, model: Iterable[int]) -> "SubmodelCoefficients":
        model = tuple(int(j) for j in model)
        return SubmodelCoefficients(model, self.alpha, self.beta[list(model)])

    def __eq__(self, other):
        if not isinstance(other, Coefficients):
            return NotImplemented
        return self.alpha == other.alpha and np.array_equal(self.beta, other.beta)

    __hash__ = None


@dataclass(frozen=True)
class SubmodelCoefficients:
    """Coefficients of the model restricted to the covariate indices in ``model``.

    Indices are 0-based column positions of ``Dataset.X``.
    """

    model: Tuple[int, ...]
    alpha: float
    beta_M: np.ndarray

    def __post_init__(self):
        model = tuple(int(j) for j in self.model)
        if any(j < 0 for j in model) or any(b <= a for a, b in zip(model, model[1:])):
            raise ValueError(f"Model indices must be non-negative and strictly increasing: {model}")
        beta_M = _frozen(np.array(self.beta_M, dtype=float).reshape(-1))
        if beta_M.shape[0] != len(model):
            raise ValueError(f"beta_M has length {beta_M.shape[0]} for a model of size {len(model)}")
        alpha = float(self.alpha)
        if not np.isfinite(alpha) or not np.all(np.isfinite(beta_M)):
            raise ValueError("Coefficients must be finite")
        object.__setattr__(self, 'model', model)
        object.__setattr__(self, 'alpha', alpha)
        object.__setattr__(self, 'beta_M', beta_M)

    @classmethod
    def from_vector(cls, model: Sequence[int], vector: Sequence[float]) -> "SubmodelCoefficients":
        vector = np.asarray(vector, dtype=float)
        return cls(tuple(model), vector[0], vector[1:])

    @property
    def size(self) -> int:
        return len(self.model)

    def as_vector(self) -> np.ndarray:
        return np.concatenate(([self.alpha], self.beta_M))

    def expand(self, p: int) -> Coefficients:
        if self.model and self.model[-1] >= p:
            raise ValueError(f"Model index {self.model[-1]} out of range for p={p}")
        beta = np.zeros(p)
        beta[list(self.model)] = self.beta_M
        return Coefficients(self.alpha, beta)

    def __eq__(self, other):
        if not isinstance(other, SubmodelCoefficients):
            return NotImplemented
        return (self.model == other.model and self.alpha == other.alpha
                and np.array_equal(self.beta_M, other.beta_M))

    __hash__ = None


@dataclass(frozen=True)
class Dataset:
    """Covariates, a partition of individuals into pools, and one test outcome per pool.

    Individual testing is the case where every pool holds exactly one individual.
    """

    X: np.ndarray
    pools: Tuple[np.ndarray, ...]
    z: np.ndarray
    se: float
    sp: float
    pool_ids: Optional[Tuple[str, ...]] = None
    covariate_names: Optional[Tuple[str, ...]] = None
    membership: np.ndarray = field(init=False, repr=False, compare=False)
    pool_sizes: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        if X.ndim != 2:
            raise DatasetValidationError(f"X must be a 2-D matrix, got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise DatasetValidationError("X contains non-finite values")
        n, p = X.shape

        pools = tuple(_frozen(np.array(pool, dtype=np.int64).reshape(-1)) for pool in self.pools)
        if not pools:
            raise DatasetValidationError("At least one pool is required")
        if any(pool.size == 0 for pool in pools):
            raise DatasetValidationError("Pools must be non-empty")
        flat = np.concatenate(pools)
        if flat.size != n or flat.min() < 0 or flat.max() >= n or np.unique(flat).size != n:
            raise DatasetValidationError(
                f"Pools must partition the {n} individuals exactly (got {flat.size} assignments)")

        z = np.array(self.z).reshape(-1)
        if z.shape[0] != len(pools):
            raise DatasetValidationError(f"Expected {len(pools)} pool outcomes, got {z.shape[0]}")
        if not np.all(np.isin(z, (0, 1))):
            raise DatasetValidationError("Pool outcomes must be 0 or 1")
        z = z.astype(np.int64)

        se = _check_accuracy("Sensitivity", self.se)
        sp = _check_accuracy("Specificity", self.sp)

        pool_ids = self.pool_ids
        if pool_ids is None:
            pool_ids = tuple(f"P{j + 1:05d}" for j in range(len(pools)))
        pool_ids = tuple(str(pid) for pid in pool_ids)
        if len(pool_ids) != len(pools) or len(set(pool_ids)) != len(pool_ids):
            raise DatasetValidationError("pool_ids must be unique with one id per pool")

        names = self.covariate_names
        if names is None:
            names = tuple(f"x{j + 1}" for j in range(p))
        names = tuple(str(name) for name in names)
        if len(names) != p:
            raise DatasetValidationError(f"Expected {p} covariate names, got {len(names)}")

        membership = np.empty(n, dtype=np.int64)
        for j, pool in enumerate(pools):
            membership[pool] = j
        sizes = np.array([pool.size for pool in pools], dtype=np.int64)

        object.__setattr__(self, 'X', _frozen(X))
        object.__setattr__(self, 'pools', pools)
        object.__setattr__(self, 'z', _frozen(z))
        object.__setattr__(self, 'se', se)
        object.__setattr__(self, 'sp', sp)
        object.__setattr__(self, 'pool_ids', pool_ids)
        object.__setattr__(self, 'covariate_names', names)
        object.__setattr__(self, 'membership', _frozen(membership))
        object.__setattr__(self, 'pool_sizes', _frozen(sizes))

    @classmethod
    def individual(cls, X, z, se: float, sp: float, covariate_names=None) -> "Dataset":
        """One pool per individual, in row order."""
        n = np.asarray(X).shape[0]
        return cls(X, tuple(np.array([i]) for i in range(n)), z, se, sp,
                   covariate_names=covariate_names)

    @classmethod
    def from_pool_labels(cls, X, labels: Sequence[str], z_by_pool: Sequence[int], se: float, sp: float,
                         covariate_names=None) -> "Dataset":
        """Group rows by label; pools are ordered by first appearance."""
        order = {}
        members = []
        for i, label in enumerate(labels):
            label = str(label)
            if label not in order:
                order[label] = len(members)
                members.append([])
            members[order[label]].append(i)
        return cls(X, tuple(np.array(m) for m in members), z_by_pool, se, sp,
                   pool_ids=tuple(order), covariate_names=covariate_names)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def n_pools(self) -> int:
        return len(self.pools)

    @property
    def is_individual(self) -> bool:
        return bool(np.all(self.pool_sizes == 1))

    @property
    def mean_pool_size(self) -> float:
        return self.n / self.n_pools

    def z_individual(self) -> np.ndarray:
        """Each individual's pool outcome."""
        return self.z[self.membership]

    def with_accuracy(self, se: float, sp: float) -> "Dataset":
        """Same observations analysed under different assumed Se/Sp."""
        return Dataset(self.X, self.pools, self.z, se, sp, self.pool_ids, self.covariate_names)

    def restrict_columns(self, model: Sequence[int]) -> "Dataset":
        model = list(model)
        return Dataset(self.X[:, model], self.pools, self.z, self.se, self.sp, self.pool_ids,
                       tuple(self.covariate_names[j] for j in model))

    def subset_pools(self, pool_indices: Sequence[int]) -> "Dataset":
        """Keep the listed pools (whole pools only) and renumber their members."""
        pool_indices = [int(j) for j in pool_indices]
        if not pool_indices:
            raise DatasetValidationError("Cannot build a dataset from zero pools")
        rows = np.concatenate([self.pools[j] for j in pool_indices])
        new_pools = []
        start = 0
        for j in pool_indices:
            size = self.pools[j].size
            new_pools.append(np.arange(start, start + size))
            start += size
        return Dataset(self.X[rows], tuple(new_pools), self.z[pool_indices], self.se, self.sp,
                       tuple(self.pool_ids[j] for j in pool_indices), self.covariate_names)

    def digest(self) -> str:
        """SHA-256 over the observable content, independent of object identity."""
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.X).tobytes())
        h.update(self.membership.tobytes())
        h.update(self.z.tobytes())
        h.update(np.array([self.se, self.sp]).tobytes())
        h.update("\x1f".join(self.pool_ids + self.covariate_names).encode())
        return h.hexdigest()

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (np.array_equal(self.X, other.X)
                and len(self.pools) == len(other.pools)
                and all(np.array_equal(a, b) for a, b in zip(self.pools, other.pools))
                and np.array_equal(self.z, other.z)
                and self.se == other.se and self.sp == other.sp
                and self.pool_ids == other.pool_ids
                and self.covariate_names == other.covariate_names)

    __hash__ = None
