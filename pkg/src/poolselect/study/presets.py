"""Named study configurations and their reference numbers.

Each preset lists the cases it runs and the checks a finished study is scored
against. Coverages and error rates are fractions, widths are on the log-odds
scale.
"""

from dataclasses import dataclass
from typing import Callable, Dict, List, Mapping, Optional, Tuple, Union

import numpy as np
from scipy import stats

from ..errors import ConfigurationError
from .dgp import DgpConfig, default_theta, lambda_grid
from .runner import StudyReport

NOMINAL_SE, NOMINAL_SP = 0.95, 0.97
COVERAGE_TOLERANCE = 0.025
WIDTH_TOLERANCE = 0.15

Metric = Callable[[StudyReport], Optional[float]]


@dataclass(frozen=True)
class StudyCase:
    name: str
    n: int = 1000
    pool_size: int = 1
    se: float = NOMINAL_SE
    sp: float = NOMINAL_SP
    assumed: Optional[Tuple[float, float]] = None

    def dgp(self, seed: int = 0) -> DgpConfig:
        return DgpConfig(n=self.n, p=10, theta_true=default_theta(10), pool_size=self.pool_size,
                         se=self.se, sp=self.sp, seed=seed)


@dataclass(frozen=True)
class CheckResult:
    case: str
    description: str
    value: Optional[float]
    low: float
    high: float
    reference: Optional[float]
    passed: bool


@dataclass(frozen=True)
class ReferenceCheck:
    """Passes when ``low <= metric(report) <= high``."""

    case: str
    description: str
    metric: Metric
    low: float = -np.inf
    high: float = np.inf
    reference: Optional[float] = None

    @property
    def cases(self) -> Tuple[str, ...]:
        return (self.case,)

    def evaluate(self, report: StudyReport) -> CheckResult:
        value = self.metric(report)
        return _scored(self.case, self.description, value, self.low, self.high, self.reference)

    def evaluate_reports(self, reports: Mapping[str, StudyReport]) -> CheckResult:
        return self.evaluate(reports[self.case])


@dataclass(frozen=True)
class RatioCheck:
    """Passes when ``low <= metric(numerator) / metric(denominator) <= high``."""

    numerator: str
    denominator: str
    description: str
    metric: Metric
    low: float = -np.inf
    high: float = np.inf
    reference: Optional[float] = None

    @property
    def cases(self) -> Tuple[str, ...]:
        return (self.numerator, self.denominator)

    def evaluate_reports(self, reports: Mapping[str, StudyReport]) -> CheckResult:
        top = self.metric(reports[self.numerator])
        bottom = self.metric(reports[self.denominator])
        value = top / bottom if top is not None and bottom else None
        return _scored(f"{self.numerator}/{self.denominator}", self.description, value,
                       self.low, self.high, self.reference)


def _scored(case: str, description: str, value: Optional[float], low: float, high: float,
            reference: Optional[float]) -> CheckResult:
    passed = value is not None and np.isfinite(value) and low <= value <= high
    return CheckResult(case, description, value, low, high, reference, bool(passed))


Check = Union[ReferenceCheck, RatioCheck]


@dataclass(frozen=True)
class StudyPreset:
    name: str
    description: str
    cases: Tuple[StudyCase, ...]
    methods: Tuple[str, ...]
    grid_size: int
    checks: Tuple[Check, ...] = ()

    def grid(self, case: StudyCase) -> np.ndarray:
        return lambda_grid(case.n, self.grid_size)


def coverage_at_median(method: str, coef: str) -> Metric:
    def metric(report: StudyReport) -> Optional[float]:
        rows = report.table(method)
        return _field(rows, coef, 'coverage')
    return metric


def width_at_median(method: str, coef: str, statistic: str = 'mean_width') -> Metric:
    def metric(report: StudyReport) -> Optional[float]:
        return _field(report.table(method), coef, statistic)
    return metric


def coverage_gap(coef: str) -> Metric:
    """Selective minus naive coverage at the median AIC penalty."""
    def metric(report: StudyReport) -> Optional[float]:
        selective = _field(report.table('selective'), coef, 'coverage')
        naive = _field(report.table('naive'), coef, 'coverage')
        if selective is None or naive is None:
            return None
        return selective - naive
    return metric


def width_gap(coef: str) -> Metric:
    def metric(report: StudyReport) -> Optional[float]:
        selective = _field(report.table('selective'), coef, 'mean_width')
        naive = _field(report.table('naive'), coef, 'mean_width')
        if selective is None or naive is None:
            return None
        return selective - naive
    return metric


def type_i_extreme(method: str, reducer: Callable) -> Metric:
    def metric(report: StudyReport) -> Optional[float]:
        values = [v for v in report.type_i_series(method) if v is not None]
        return float(reducer(values)) if values else None
    return metric


def type_i_top_quartile(method: str) -> Metric:
    """Smallest Type I error over the upper quarter of the grid."""
    def metric(report: StudyReport) -> Optional[float]:
        series = report.type_i_series(method)
        top = series[len(series) - max(1, int(np.ceil(len(series) / 4))):]
        values = [v for v in top if v is not None]
        return float(min(values)) if values else None
    return metric


def type_i_trend(method: str) -> Metric:
    """Spearman correlation between lambda and Type I error."""
    def metric(report: StudyReport) -> Optional[float]:
        pairs = [(lam, v) for lam, v in zip(report.grid, report.type_i_series(method)) if v is not None]
        if len(pairs) < 3:
            return None
        lams, values = zip(*pairs)
        if np.ptp(values) == 0.0:
            return None
        return float(stats.spearmanr(lams, values).statistic)
    return metric


def _field(rows, coef: str, name: str) -> Optional[float]:
    for row in rows:
        if row.coef == coef:
            return getattr(row, name)
    return None


def _within(case: str, description: str, metric: Metric, reference: float, tolerance: float,
            relative: bool = False) -> ReferenceCheck:
    half = reference * tolerance if relative else tolerance
    return ReferenceCheck(case, description, metric, reference - half, reference + half, reference)


def _positive(case: str, description: str, metric: Metric) -> ReferenceCheck:
    return ReferenceCheck(case, description, metric, low=np.nextafter(0.0, 1.0))


POOL_CASES = tuple(StudyCase(f"m{m}", pool_size=m) for m in (1, 2, 4))
LARGE_CASES = tuple(StudyCase(f"n2000_m{m}", n=2000, pool_size=m) for m in (1, 2, 4))

_TABLE1_SELECTIVE = {'m1': 0.949, 'm2': 0.941, 'm4': 0.942,
                     'n2000_m1': 0.948, 'n2000_m2': 0.955, 'n2000_m4': 0.943}
_TABLE1_NAIVE = {'m1': 0.928, 'm2': 0.912, 'm4': 0.901,
                 'n2000_m1': 0.928, 'n2000_m2': 0.924, 'n2000_m4': 0.913}
_TABLE1_SELECTIVE_WIDTH = {'m1': 2.5, 'm2': 2.8, 'm4': 3.5,
                           'n2000_m1': 1.7, 'n2000_m2': 1.9, 'n2000_m4': 2.3}
_TABLE1_NAIVE_WIDTH = {'m1': 0.9, 'm2': 1.0, 'm4': 1.1,
                       'n2000_m1': 0.6, 'n2000_m2': 0.7, 'n2000_m4': 0.8}


def _table1_checks() -> Tuple[Check, ...]:
    checks: List[Check] = []
    for case in POOL_CASES + LARGE_CASES:
        c = case.name
        for coef in ('x4', 'x6'):
            checks.append(_within(c, f"selective {coef} coverage", coverage_at_median('selective', coef),
                                  _TABLE1_SELECTIVE[c], COVERAGE_TOLERANCE))
            checks.append(_within(c, f"naive {coef} coverage", coverage_at_median('naive', coef),
                                  _TABLE1_NAIVE[c], COVERAGE_TOLERANCE))
            checks.append(_positive(c, f"{coef} selective coverage above naive", coverage_gap(coef)))
        checks.append(_within(c, "selective x4 trimmed mean width",
                              width_at_median('selective', 'x4', 'trimmed_width'),
                              _TABLE1_SELECTIVE_WIDTH[c], WIDTH_TOLERANCE, relative=True))
        checks.append(_within(c, "naive x4 mean width", width_at_median('naive', 'x4'),
                              _TABLE1_NAIVE_WIDTH[c], WIDTH_TOLERANCE, relative=True))
        checks.append(_positive(c, "x4 selective wider than naive", width_gap('x4')))
    ratio = 1.0 / np.sqrt(2.0)
    for small, large in zip(POOL_CASES, LARGE_CASES):
        checks.append(RatioCheck(large.name, small.name, "naive x4 width shrinks like n^-1/2",
                                 width_at_median('naive', 'x4'), ratio * (1.0 - WIDTH_TOLERANCE),
                                 ratio * (1.0 + WIDTH_TOLERANCE), ratio))
    return tuple(checks)


def _figure1_checks() -> Tuple[ReferenceCheck, ...]:
    checks: List[ReferenceCheck] = []
    for case in POOL_CASES:
        checks.append(ReferenceCheck(case.name, "selective Type I error, lowest over grid",
                                     type_i_extreme('selective', min), low=0.03, reference=0.05))
        checks.append(ReferenceCheck(case.name, "selective Type I error, highest over grid",
                                     type_i_extreme('selective', max), high=0.07, reference=0.05))
    checks.append(ReferenceCheck('m4', "naive Type I error over top grid quartile",
                                 type_i_top_quartile('naive'), low=np.nextafter(0.08, 1.0)))
    checks.append(ReferenceCheck('m4', "naive Type I error Spearman trend in lambda",
                                 type_i_trend('naive'), low=np.nextafter(0.8, 1.0)))
    return tuple(checks)


def _table2_checks() -> Tuple[ReferenceCheck, ...]:
    return (
        ReferenceCheck('m1', "selective x2 coverage under wrong accuracy",
                       coverage_at_median('selective', 'x2'), high=np.nextafter(0.25, 0.0), reference=0.138),
        _within('m1', "selective x4 coverage under wrong accuracy", coverage_at_median('selective', 'x4'),
                0.953, COVERAGE_TOLERANCE),
    )


def _appendix_checks() -> Tuple[ReferenceCheck, ...]:
    return (
        _within('m2', "split x2 coverage", coverage_at_median('split', 'x2'), 0.958, COVERAGE_TOLERANCE),
        _within('m2', "split x4 mean width", width_at_median('split', 'x4'), 1.7, WIDTH_TOLERANCE, relative=True),
    )


PRESETS: Dict[str, StudyPreset] = {
    'table1': StudyPreset(
        'table1', "Coverage and width at the median AIC penalty, n=1000 and n=2000",
        POOL_CASES + LARGE_CASES, ('selective', 'naive'), 25, _table1_checks()),
    'figure1': StudyPreset(
        'figure1', "Type I error across the penalty grid with AIC/BIC choices",
        POOL_CASES, ('selective', 'naive'), 15, _figure1_checks()),
    'table2': StudyPreset(
        'table2', "Misspecified accuracy: data Se=0.90/Sp=0.92, analysis Se=0.95/Sp=0.97",
        tuple(StudyCase(f"m{m}", pool_size=m, se=0.90, sp=0.92, assumed=(NOMINAL_SE, NOMINAL_SP))
              for m in (1, 2, 4)),
        ('selective', 'naive'), 25, _table2_checks()),
    'appendixC': StudyPreset(
        'appendixC', "Data splitting at n=1000, m=2",
        (StudyCase('m2', pool_size=2),), ('split',), 25, _appendix_checks()),
}


def get_preset(name: str) -> StudyPreset:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigurationError(f"Unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def evaluate_checks(preset: StudyPreset, reports: Mapping[str, StudyReport]) -> List[CheckResult]:
    """Score every check whose case was run."""
    return [check.evaluate_reports(reports) for check in preset.checks
            if all(case in reports for case in check.cases)]
