"""Writers for study reports: JSON, tidy CSV and the console summary."""

import json
from pathlib import Path
from typing import List, Mapping, Sequence, Union

import pandas as pd

from .presets import CheckResult, StudyPreset
from .runner import StudyReport

TIDY_COLUMNS = ['lambda', 'method', 'metric', 'coef', 'value']
SUMMARY_SCHEMA = 'poolselect.study-summary/1'
SUMMARY_COEFFICIENTS = ('x2', 'x4', 'x6')

PathLike = Union[str, Path]


def write_json(payload: dict, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w') as f:
        json.dump(payload, f, indent=2)
        f.write('\n')
    return path


def write_study_json(report: StudyReport, path: PathLike) -> Path:
    return write_json(report.to_dict(), path)


def tidy_frame(report: StudyReport) -> pd.DataFrame:
    frame = pd.DataFrame(report.tidy_rows(), columns=TIDY_COLUMNS)
    return frame.sort_values(['lambda', 'method', 'metric', 'coef'], kind='mergesort').reset_index(drop=True)


def write_tidy_csv(report: StudyReport, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tidy_frame(report).to_csv(path, index=False, lineterminator='\n')
    return path


def write_summary_json(preset: StudyPreset, reports: Mapping[str, StudyReport],
                       checks: Sequence[CheckResult], path: PathLike) -> Path:
    payload = {
        'schema': SUMMARY_SCHEMA,
        'preset': preset.name,
        'description': preset.description,
        'cases': {
            name: {
                'median_aic_lambda': report.median_aic_lambda,
                'median_bic_lambda': report.median_bic_lambda,
                'type_i_at_aic': report.type_i_at_aic,
                'type_i_at_bic': report.type_i_at_bic,
                'failures': report.failures,
                'evaluations': report.evaluations,
            }
            for name, report in reports.items()
        },
        'checks': [vars(check) for check in checks],
        'passed': all(check.passed for check in checks),
    }
    return write_json(payload, path)


def _fmt(value, spec: str = '.3f') -> str:
    return '-' if value is None else format(value, spec)


def format_summary(preset: StudyPreset, reports: Mapping[str, StudyReport],
                   checks: Sequence[CheckResult]) -> str:
    """Plain-text table of the headline coefficients plus the check verdicts."""
    lines: List[str] = [f"{preset.name}: {preset.description}"]
    header = (f"{'case':<10}{'method':<11}{'coef':<6}{'selected':>9}{'coverage':>10}{'width':>8}"
              f"{'median':>8}{'trimmed':>9}{'lower':>9}{'upper':>9}")
    for name, report in reports.items():
        lam = report.median_aic_lambda
        lines.append('')
        lines.append(f"[{name}] median AIC lambda = {_fmt(lam, '.4g')}, median BIC lambda = "
                     f"{_fmt(report.median_bic_lambda, '.4g')}, failures {report.failures}/{report.evaluations}")
        lines.append(header)
        for method in report.methods:
            rows = {row.coef: row for row in report.table(method)}
            for coef in SUMMARY_COEFFICIENTS:
                row = rows.get(coef)
                if row is None:
                    continue
                lines.append(f"{name:<10}{method:<11}{coef:<6}{row.selected:>9}{_fmt(row.coverage):>10}"
                             f"{_fmt(row.mean_width):>8}{_fmt(row.median_width):>8}{_fmt(row.trimmed_width):>9}"
                             f"{_fmt(row.mean_lower):>9}{_fmt(row.mean_upper):>9}")
        rates = ', '.join(f"{m}={_fmt(v)}" for m, v in report.type_i_at_aic.items())
        lines.append(f"Type I error at each replicate's AIC choice: {rates}")

    if checks:
        lines.append('')
        lines.append('Reference checks:')
        for check in checks:
            verdict = 'PASS' if check.passed else 'FAIL'
            reference = '' if check.reference is None else f" (reference {check.reference:g})"
            lines.append(f"  {verdict} [{check.case}] {check.description}: {_fmt(check.value, '.4f')} "
                         f"in [{check.low:.4g}, {check.high:.4g}]{reference}")
    return '\n'.join(lines)
