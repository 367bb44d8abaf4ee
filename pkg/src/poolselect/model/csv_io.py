"""Dataset and truth CSV files.

Dataset layout: header ``pool_id,z,<covariate columns>``, one row per individual.
Line numbers in error messages are 1-based file lines (the header is line 1).
"""

from pathlib import Path
from typing import List, Union

import numpy as np
import pandas as pd

from ..errors import DatasetValidationError
from .dataset import Dataset

PathLike = Union[str, Path]

FLOAT_FORMAT = "%.17g"


def _data_lines(path: PathLike) -> List[int]:
    """1-based file line of every data row; pandas drops blank lines."""
    text = Path(path).read_text(encoding='utf-8')
    return [k for k, line in enumerate(text.splitlines(), start=1) if line.strip()][1:]


def _line(row_index, data_lines: List[int]) -> int:
    row_index = int(row_index)
    if row_index < len(data_lines):
        return data_lines[row_index]
    return row_index + 2

def read_dataset_csv(path: PathLike, se: float, sp: float) -> Dataset:
    """Parse and validate a dataset CSV.

    Raises DatasetValidationError for header, ragged-row, numeric or
    within-pool outcome problems, and OSError when the file cannot be read.
    """
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.ParserError as e:
        raise DatasetValidationError(f"Malformed CSV {path}: {e}")
    except pd.errors.EmptyDataError:
        raise DatasetValidationError(f"CSV {path} is empty")

    columns = [str(c).strip() for c in frame.columns]
    if len(columns) < 2 or columns[0] != 'pool_id' or columns[1] != 'z':
        raise DatasetValidationError(f"CSV header must start with 'pool_id,z', got {','.join(columns)}",
                                     line_numbers=[1])
    if any(c.startswith('Unnamed:') or not c for c in columns):
        raise DatasetValidationError("CSV header has empty column names", line_numbers=[1])
    if len(set(columns)) != len(columns):
        raise DatasetValidationError("CSV header has duplicate column names", line_numbers=[1])
    frame.columns = columns
    lines = _data_lines(path)
    if frame.empty:
        raise DatasetValidationError(f"CSV {path} has no data rows")

    missing = (frame.isna() | frame.eq('')).any(axis=1)
    if missing.any():
        raise DatasetValidationError("Ragged or incomplete rows",
                                     line_numbers=[_line(i, lines) for i in frame.index[missing]])

    covariates = columns[2:]
    try:
        X = np.array(frame[covariates].to_numpy(dtype=object), dtype=float)
    except ValueError as e:
        bad = frame[covariates].apply(pd.to_numeric, errors='coerce').isna().any(axis=1)
        raise DatasetValidationError(f"Non-numeric covariate value: {e}",
                                     line_numbers=[_line(i, lines) for i in frame.index[bad]])
    if not np.all(np.isfinite(X)):
        bad = ~np.isfinite(X).all(axis=1)
        raise DatasetValidationError("Non-finite covariate value",
                                     line_numbers=[_line(i, lines) for i in frame.index[bad]])

    z_text = frame['z']
    bad_z = ~z_text.isin(('0', '1'))
    if bad_z.any():
        raise DatasetValidationError("z must be 0 or 1",
                                     line_numbers=[_line(i, lines) for i in frame.index[bad_z]])
    z_row = z_text.astype(int)

    labels = frame['pool_id']
    per_pool = z_row.groupby(labels, sort=False).nunique()
    inconsistent = per_pool[per_pool > 1].index
    if len(inconsistent):
        rows = frame.index[labels.isin(inconsistent)]
        raise DatasetValidationError(
            f"Inconsistent z within pool(s) {', '.join(map(str, inconsistent[:5]))}",
            line_numbers=[_line(i, lines) for i in rows])
    z_by_pool = z_row.groupby(labels, sort=False).first().to_numpy()

    return Dataset.from_pool_labels(X, labels.tolist(), z_by_pool, se, sp, covariate_names=covariates)


def dataset_frame(data: Dataset) -> pd.DataFrame:
    frame = pd.DataFrame(data.X, columns=list(data.covariate_names))
    frame.insert(0, 'z', data.z_individual())
    frame.insert(0, 'pool_id', [data.pool_ids[j] for j in data.membership])
    return frame


def write_dataset_csv(data: Dataset, path: PathLike) -> Path:
    """Write rows ordered pool by pool so that re-reading preserves pool order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    order = np.concatenate(data.pools)
    dataset_frame(data).iloc[order].to_csv(path, index=False, float_format=FLOAT_FORMAT,
                                           lineterminator='\n')
    return path


def write_truth_csv(y_true: np.ndarray, path: PathLike, row_order=None) -> Path:
    """Write ``id,y_true`` with ids numbering dataset CSV rows from 1."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    y = np.asarray(y_true, dtype=np.int64)
    if row_order is not None:
        y = y[np.asarray(row_order)]
    frame = pd.DataFrame({'id': np.arange(1, y.size + 1), 'y_true': y})
    frame.to_csv(path, index=False, lineterminator='\n')
    return path


def read_truth_csv(path: PathLike) -> np.ndarray:
    frame = pd.read_csv(path)
    if list(frame.columns) != ['id', 'y_true']:
        raise DatasetValidationError("Truth CSV header must be 'id,y_true'", line_numbers=[1])
    return frame.sort_values('id')['y_true'].to_numpy(dtype=np.int64)
