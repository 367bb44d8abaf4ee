"""Monte Carlo replication engine.

Replicate r draws its data from the r-th child of ``SeedSequence(seed)``, so a
study is a pure function of its inputs whatever the number of workers.
Results are collected in replicate order and reduced deterministically.
"""

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor, TimeoutError
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from scipy import stats
from tqdm import tqdm

from ..config.parse_config import FitSettings
from ..errors import ConfigurationError, ConvergenceError, PoolSelectError, StudyInterrupted
from ..fitting.em import em_fit
from ..inference.intervals import naive_ci, selective_intervals, split_inference_detailed
from ..inference.selection import build_post_selection_estimate
from ..model.likelihood import aic_bic
from ..utils.timing import measure_replicate
from .dgp import DgpConfig, simulate_dataset
from .metrics import type_i_error_rate

METHODS = ('selective', 'naive', 'split')
STUDY_SCHEMA = 'poolselect.study/1'
WIDTH_TRIM = 0.1

# Set from signal handlers; checked between replicates.
_shutdown_requested = False


def request_shutdown() -> None:
    global _shutdown_requested
    _shutdown_requested = True


def reset_shutdown() -> None:
    global _shutdown_requested
    _shutdown_requested = False


@dataclass(frozen=True, eq=False)
class ReplicateTask:
    index: int
    cfg: DgpConfig
    grid: Tuple[float, ...]
    methods: Tuple[str, ...]
    seed: np.random.SeedSequence
    level: float = 0.95
    assumed: Optional[Tuple[float, float]] = None
    information: str = 'louis'
    fit_settings: FitSettings = field(default_factory=FitSettings)

    def split_seed(self) -> int:
        child = np.random.SeedSequence(self.seed.entropy, spawn_key=tuple(self.seed.spawn_key) + (1,))
        return int(child.generate_state(1)[0])


@dataclass
class LambdaOutcome:
    """Everything one replicate contributes at one penalty value.

    ``intervals[method][j]`` holds (lower, upper, point) for covariate j.
    ``failure`` marks a failed fit, ``method_failures`` a method that failed
    on an otherwise usable fit.
    """

    lam: float
    aic: float = math.nan
    bic: float = math.nan
    models: Dict[str, Tuple[int, ...]] = field(default_factory=dict)
    intervals: Dict[str, Dict[int, Tuple[float, float, float]]] = field(default_factory=dict)
    failure: Optional[str] = None
    method_failures: Dict[str, str] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.failure is None

    def has(self, method: str) -> bool:
        return self.ok and method in self.intervals


@dataclass
class ReplicateResult:
    index: int
    outcomes: List[LambdaOutcome]
    failure: Optional[str] = None


def _pack(intervals) -> Dict[int, Tuple[float, float, float]]:
    return {iv.coef: (iv.lower, iv.upper, iv.point) for iv in intervals}


def evaluate_lambda(data, lam: float, task: ReplicateTask, split_seed: int) -> LambdaOutcome:
    outcome = LambdaOutcome(float(lam))
    try:
        fit = em_fit(data, lam, settings=task.fit_settings)
        if not fit.converged:
            raise ConvergenceError(f"EM did not converge in {fit.iterations} iterations", fit.em_trace)
        outcome.aic, outcome.bic = aic_bic(fit.submodel(), data)
    except PoolSelectError as e:
        outcome.failure = f"{type(e).__name__}: {e}"
        logger.warning(f"Replicate {task.index} at lambda={lam:g} excluded: {outcome.failure}. "
                       f"PID: {os.getpid()}")
        return outcome

    for method in task.methods:
        try:
            if method == 'selective':
                model, intervals = fit.model, []
                if fit.model:
                    estimate = build_post_selection_estimate(fit, data, task.information)
                    intervals = selective_intervals(estimate, data, task.level)
            elif method == 'naive':
                model = fit.model
                intervals = naive_ci(fit, data, task.level, settings=task.fit_settings,
                                     information=task.information)
            else:
                split = split_inference_detailed(data, lam, task.level, split_seed, settings=task.fit_settings)
                model, intervals = split.model, split.intervals
        except PoolSelectError as e:
            outcome.method_failures[method] = f"{type(e).__name__}: {e}"
            logger.warning(f"Replicate {task.index} at lambda={lam:g}: {method} excluded: "
                           f"{outcome.method_failures[method]}. PID: {os.getpid()}")
            continue
        outcome.models[method] = model
        outcome.intervals[method] = _pack(intervals)
    return outcome


@measure_replicate
def run_replicate(task: ReplicateTask) -> ReplicateResult:
    try:
        simulated = simulate_dataset(task.cfg, seed=task.seed)
        data = simulated.dataset
        if task.assumed is not None:
            data = data.with_accuracy(*task.assumed)
    except PoolSelectError as e:
        reason = f"{type(e).__name__}: {e}"
        logger.warning(f"Replicate {task.index} could not be simulated: {reason}")
        return ReplicateResult(task.index, [], reason)

    split_seed = task.split_seed()
    outcomes = [evaluate_lambda(data, lam, task, split_seed) for lam in task.grid]
    return ReplicateResult(task.index, outcomes)


def _collect(tasks: Sequence[ReplicateTask], threads: int, progress: bool) -> List[ReplicateResult]:
    results = []
    bar = tqdm(total=len(tasks), desc="replicates", disable=not progress, leave=False)
    try:
        if threads <= 1:
            for task in tasks:
                if _shutdown_requested:
                    raise StudyInterrupted(f"Stopped after {len(results)} of {len(tasks)} replicates")
                results.append(run_replicate(task))
                bar.update(1)
            return results

        logger.info(f"Spawning {threads} replicate workers. PID: {os.getpid()}")
        with ProcessPoolExecutor(max_workers=threads) as executor:
            futures = [executor.submit(run_replicate, task) for task in tasks]
            for future in futures:
                while True:
                    if _shutdown_requested:
                        executor.shutdown(wait=False, cancel_futures=True)
                        raise StudyInterrupted(f"Stopped after {len(results)} of {len(tasks)} replicates")
                    try:
                        results.append(future.result(timeout=1.0))
                        break
                    except TimeoutError:
                        continue
                bar.update(1)
        return results
    finally:
        bar.close()


@dataclass(frozen=True)
class CoefficientSummary:
    """Per-coefficient averages over the replicates that selected it.

    ``trimmed_width`` is the mean width after dropping WIDTH_TRIM of each tail.
    """

    coef: str
    index: int
    selected: int
    coverage: Optional[float]
    mean_lower: Optional[float]
    mean_upper: Optional[float]
    mean_width: Optional[float]
    mean_point: Optional[float]
    mean_odds_lower: Optional[float]
    mean_odds_upper: Optional[float]
    median_width: Optional[float] = None
    trimmed_width: Optional[float] = None


@dataclass(frozen=True)
class LambdaSummary:
    lam: float
    method: str
    successes: int
    failures: int
    type_i_error: Optional[float]
    coefficients: Tuple[CoefficientSummary, ...]

    def coefficient(self, name: str) -> CoefficientSummary:
        for summary in self.coefficients:
            if summary.coef == name:
                return summary
        raise KeyError(name)


def _mean(values: Iterable[float]) -> Optional[float]:
    values = list(values)
    if not values:
        return None
    with np.errstate(over='ignore'):
        return float(np.mean(values))


def _summarize_coefficient(name: str, j: int, truth: float,
                           rows: List[Tuple[float, float, float]]) -> CoefficientSummary:
    lowers = [r[0] for r in rows]
    uppers = [r[1] for r in rows]
    widths = [hi - lo for lo, hi, _ in rows]
    with np.errstate(over='ignore', invalid='ignore'):
        odds_lower = _mean(np.exp(lowers)) if rows else None
        odds_upper = _mean(np.exp(uppers)) if rows else None
        median_width = float(np.median(widths)) if rows else None
        trimmed_width = float(stats.trim_mean(widths, WIDTH_TRIM)) if rows else None
    return CoefficientSummary(
        coef=name,
        index=j,
        selected=len(rows),
        coverage=_mean(1.0 if lo <= truth <= hi else 0.0 for lo, hi, _ in rows),
        mean_lower=_mean(lowers),
        mean_upper=_mean(uppers),
        mean_width=_mean(widths),
        mean_point=_mean(r[2] for r in rows),
        mean_odds_lower=odds_lower,
        mean_odds_upper=odds_upper,
        median_width=median_width,
        trimmed_width=trimmed_width,
    )


def _nearest_grid_index(grid: np.ndarray, value: float) -> int:
    return int(np.argmin(np.abs(grid - value)))


@dataclass(frozen=True)
class StudyReport:
    config: dict
    grid: Tuple[float, ...]
    methods: Tuple[str, ...]
    replicates: int
    seed: int
    level: float
    assumed: Optional[Tuple[float, float]]
    information: str
    summaries: Tuple[LambdaSummary, ...]
    aic_histogram: Tuple[int, ...]
    bic_histogram: Tuple[int, ...]
    median_aic_lambda: Optional[float]
    median_bic_lambda: Optional[float]
    type_i_at_aic: Dict[str, Optional[float]]
    type_i_at_bic: Dict[str, Optional[float]]
    evaluations: int
    failures: int
    replicate_failures: int
    failure_reasons: Dict[str, int]
    runtime_seconds: float = 0.0

    @property
    def failure_fraction(self) -> float:
        return self.failures / self.evaluations if self.evaluations else 0.0

    def summary(self, lam: float, method: str) -> LambdaSummary:
        index = _nearest_grid_index(np.asarray(self.grid), lam)
        for summary in self.summaries:
            if summary.method == method and summary.lam == self.grid[index]:
                return summary
        raise KeyError((lam, method))

    def table(self, method: str, lam: Optional[float] = None) -> Tuple[CoefficientSummary, ...]:
        """Coefficient rows at ``lam`` (default: the median AIC-chosen penalty)."""
        if lam is None:
            lam = self.median_aic_lambda
        if lam is None:
            return ()
        return self.summary(lam, method).coefficients

    def type_i_series(self, method: str) -> List[Optional[float]]:
        return [s.type_i_error for s in self.summaries if s.method == method]

    def to_dict(self) -> dict:
        return {
            'schema': STUDY_SCHEMA,
            'config': self.config,
            'grid': list(self.grid),
            'methods': list(self.methods),
            'replicates': self.replicates,
            'seed': self.seed,
            'level': self.level,
            'assumed': list(self.assumed) if self.assumed else None,
            'information': self.information,
            'median_aic_lambda': self.median_aic_lambda,
            'median_bic_lambda': self.median_bic_lambda,
            'aic_histogram': list(self.aic_histogram),
            'bic_histogram': list(self.bic_histogram),
            'type_i_at_aic': self.type_i_at_aic,
            'type_i_at_bic': self.type_i_at_bic,
            'evaluations': self.evaluations,
            'failures': self.failures,
            'replicate_failures': self.replicate_failures,
            'failure_reasons': self.failure_reasons,
            'runtime_seconds': self.runtime_seconds,
            'summaries': [
                {
                    'lambda': s.lam,
                    'method': s.method,
                    'successes': s.successes,
                    'failures': s.failures,
                    'type_i_error': s.type_i_error,
                    'coefficients': [vars(c) for c in s.coefficients],
                }
                for s in self.summaries
            ],
        }

    def tidy_rows(self) -> List[dict]:
        """Rows of (lambda, method, metric, coef, value) for plotting tools."""
        rows = []
        metrics = ('selected', 'coverage', 'mean_lower', 'mean_upper', 'mean_width', 'median_width',
                   'trimmed_width', 'mean_point', 'mean_odds_lower', 'mean_odds_upper')
        for s in self.summaries:
            rows.append(dict(**{'lambda': s.lam}, method=s.method, metric='type_i_error', coef='',
                             value=s.type_i_error))
            rows.append(dict(**{'lambda': s.lam}, method=s.method, metric='successes', coef='',
                             value=s.successes))
            for c in s.coefficients:
                for metric in metrics:
                    rows.append(dict(**{'lambda': s.lam}, method=s.method, metric=metric, coef=c.coef,
                                     value=getattr(c, metric)))
        for criterion, histogram in (('aic', self.aic_histogram), ('bic', self.bic_histogram)):
            for lam, count in zip(self.grid, histogram):
                rows.append(dict(**{'lambda': lam}, method=criterion, metric='chosen_count', coef='',
                                 value=count))
        return rows


def aggregate(results: Sequence[ReplicateResult], cfg: DgpConfig, grid: Sequence[float],
              methods: Sequence[str], seed: int, level: float, assumed, information: str,
              runtime_seconds: float = 0.0) -> StudyReport:
    grid = np.asarray(grid, dtype=float)
    theta = cfg.theta_true
    names = [f"x{j + 1}" for j in range(cfg.p)]
    usable = [r for r in results if r.failure is None]
    failure_reasons: Dict[str, int] = {}

    for r in results:
        if r.failure:
            reasons = [r.failure]
        else:
            reasons = [o.failure for o in r.outcomes if not o.ok]
            reasons += [reason for o in r.outcomes for reason in o.method_failures.values()]
        for reason in reasons:
            key = reason.split(':', 1)[0]
            failure_reasons[key] = failure_reasons.get(key, 0) + 1

    summaries = []
    for l, lam in enumerate(grid):
        for method in methods:
            ok = [r.outcomes[l] for r in usable if r.outcomes[l].has(method)]
            rates = [type_i_error_rate(o.models[method], o.intervals[method], theta) for o in ok]
            coefficients = tuple(
                _summarize_coefficient(names[j], j, float(theta.beta[j]),
                                       [o.intervals[method][j] for o in ok if j in o.intervals[method]])
                for j in range(cfg.p)
            )
            summaries.append(LambdaSummary(float(lam), method, len(ok), len(results) - len(ok), _mean(rates),
                                           coefficients))

    def choices(criterion: str) -> List[Tuple[ReplicateResult, int]]:
        chosen = []
        for r in usable:
            values = np.array([getattr(o, criterion) if o.ok else np.inf for o in r.outcomes])
            if np.isfinite(values).any():
                chosen.append((r, int(np.argmin(values))))
        return chosen

    def median_lambda(chosen) -> Optional[float]:
        if not chosen:
            return None
        return float(grid[_nearest_grid_index(grid, float(np.median([grid[i] for _, i in chosen])))])

    def rate_at(chosen, method: str) -> Optional[float]:
        return _mean(type_i_error_rate(r.outcomes[i].models[method], r.outcomes[i].intervals[method], theta)
                     for r, i in chosen if r.outcomes[i].has(method))

    aic_choices, bic_choices = choices('aic'), choices('bic')
    evaluations = len(results) * len(grid) * len(methods)
    failures = evaluations - sum(1 for r in usable for o in r.outcomes for m in methods if o.has(m))

    return StudyReport(
        config=cfg.to_dict(),
        grid=tuple(float(g) for g in grid),
        methods=tuple(methods),
        replicates=len(results),
        seed=int(seed),
        level=float(level),
        assumed=tuple(assumed) if assumed else None,
        information=information,
        summaries=tuple(summaries),
        aic_histogram=tuple(int(c) for c in np.bincount([i for _, i in aic_choices], minlength=len(grid))),
        bic_histogram=tuple(int(c) for c in np.bincount([i for _, i in bic_choices], minlength=len(grid))),
        median_aic_lambda=median_lambda(aic_choices),
        median_bic_lambda=median_lambda(bic_choices),
        type_i_at_aic={m: rate_at(aic_choices, m) for m in methods},
        type_i_at_bic={m: rate_at(bic_choices, m) for m in methods},
        evaluations=evaluations,
        failures=failures,
        replicate_failures=len(results) - len(usable),
        failure_reasons=failure_reasons,
        runtime_seconds=runtime_seconds,
    )


def run_study(cfg: DgpConfig, grid: Sequence[float], replicates: int, methods: Iterable[str], seed: int,
              threads: int = 1, level: float = 0.95, assumed: Optional[Tuple[float, float]] = None,
              information: str = 'louis', fit_settings: Optional[FitSettings] = None,
              progress: bool = False) -> StudyReport:
    """Simulate ``replicates`` datasets and run every method at every penalty in ``grid``."""
    requested = set(methods)
    methods = tuple(m for m in METHODS if m in requested)
    if not methods or requested - set(METHODS):
        raise ConfigurationError(f"Methods must be a non-empty subset of {METHODS}")
    if replicates < 1:
        raise ConfigurationError(f"replicates must be >= 1, got {replicates}")
    if assumed is not None and tuple(assumed) == (cfg.se, cfg.sp):
        assumed = None
    grid = tuple(float(g) for g in grid)
    fit_settings = fit_settings or FitSettings()

    children = np.random.SeedSequence(seed).spawn(replicates)
    tasks = [ReplicateTask(r, cfg, grid, methods, child, level, assumed, information, fit_settings)
             for r, child in enumerate(children)]

    logger.info(f"Running {replicates} replicates x {len(grid)} penalties (n={cfg.n}, m={cfg.pool_size}, "
                f"methods={','.join(methods)}, workers={threads})")
    start = time.perf_counter()
    results = _collect(tasks, threads, progress)
    runtime = time.perf_counter() - start

    report = aggregate(results, cfg, grid, methods, seed, level, assumed, information, runtime)
    logger.info(f"Study finished in {runtime:.1f}s; {report.failures}/{report.evaluations} evaluations failed")
    return report


def misspecification_study(cfg_true: DgpConfig, assumed_se: float, assumed_sp: float,
                           grid: Sequence[float], replicates: int, methods: Iterable[str], seed: int,
                           **kwargs) -> StudyReport:
    """Generate with cfg_true's accuracy, analyse with the assumed accuracy."""
    return run_study(cfg_true, grid, replicates, methods, seed, assumed=(assumed_se, assumed_sp), **kwargs)
