"""Delimited-text import and export of feature, performance and design-set tables."""
import logging
import os
import time
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd

from src.errors import DataError
from src.models.benchmark import DesignSet
from src.models.feature_vector import FeatureTable
from src.models.performance_record import PerformanceRecord
from src.services.problem_suite import design_set_table


logger = logging.getLogger(__name__)

KEY_COLUMNS = ["problem_id", "instance_id"]
PERFORMANCE_COLUMNS = ["algorithm", "problem_id", "instance_id", "budget", "target_precision"]


def format_float(value) -> str:
    """Shortest round-trip text of a float, numpy scalars included."""
    return repr(float(value))


class ParseError(DataError):
    """Raised when a table row cannot be parsed."""

    def __init__(self, message: str, line_number: Optional[int] = None, path: Optional[str] = None):
        self.line_number = line_number
        self.path = path
        where = f"{path}:" if path else "line "
        if line_number is not None:
            message = f"{where}{line_number}: {message}"
        super().__init__(message)


def _read_raw(path: str, expected: Optional[Sequence[str]] = None) -> pd.DataFrame:
    """Read every cell as text; header checked against expected columns."""
    if not os.path.exists(path):
        raise DataError(f"Table file not found: {path}")
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise ParseError("Empty table, header expected", line_number=1, path=path)
    except pd.errors.ParserError as e:
        raise ParseError(f"Malformed table: {e}", path=path)
    frame.columns = [c.strip() for c in frame.columns]
    if expected is not None and list(frame.columns) != list(expected):
        raise ParseError(
            f"Header {list(frame.columns)} does not match {list(expected)}", line_number=1, path=path
        )
    return frame


def _parse_int(value: str, column: str, line_number: int, path: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ParseError(f"Column {column!r} expects an integer, got {value!r}", line_number, path)


def _parse_float(value: str, column: str, line_number: int, path: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ParseError(f"Column {column!r} expects a number, got {value!r}", line_number, path)


def _write_frame(frame: pd.DataFrame, path: str) -> None:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    frame.to_csv(path, index=False, float_format=format_float, lineterminator="\n")


def feature_table_frame(table: FeatureTable) -> pd.DataFrame:
    """DataFrame with problem_id, instance_id and one column per feature."""
    frame = pd.DataFrame(np.asarray(table.matrix, dtype=float), columns=list(table.names))
    frame.insert(0, "instance_id", [k[1] for k in table.keys])
    frame.insert(0, "problem_id", [k[0] for k in table.keys])
    return frame


def save_feature_table(table: FeatureTable, path: str) -> None:
    """Write a feature table as CSV, rows ordered by (problem_id, instance_id)."""
    order = sorted(range(len(table.keys)), key=lambda i: table.keys[i])
    ordered = FeatureTable(
        names=list(table.names),
        keys=[table.keys[i] for i in order],
        matrix=np.asarray(table.matrix)[order],
    )
    _write_frame(feature_table_frame(ordered), path)
    logger.info(f"Wrote {len(table)} feature rows to {path}")


def load_feature_table(path: str, expected_names: Optional[Sequence[str]] = None) -> FeatureTable:
    """Read a feature table written by save_feature_table (or an external one).

    Args:
        path: CSV file with problem_id, instance_id and feature columns
        expected_names: Feature names the table must carry, in order

    Raises:
        ParseError: Malformed header or cell (with line number)
        DataError: Duplicate keys or non-finite values
    """
    start = time.time()
    frame = _read_raw(path)
    if list(frame.columns[:2]) != KEY_COLUMNS:
        raise ParseError(f"First columns must be {KEY_COLUMNS}", line_number=1, path=path)
    names = list(frame.columns[2:])
    if not names:
        raise ParseError("Table has no feature columns", line_number=1, path=path)
    if expected_names is not None and names != list(expected_names):
        missing = [n for n in expected_names if n not in names]
        extra = [n for n in names if n not in expected_names]
        raise DataError(f"Feature columns differ (missing {missing}, unexpected {extra})")

    keys = []
    rows = []
    for i, record in enumerate(frame.itertuples(index=False, name=None)):
        line_number = i + 2
        key = (
            _parse_int(record[0], "problem_id", line_number, path),
            _parse_int(record[1], "instance_id", line_number, path),
        )
        values = [_parse_float(v, names[j], line_number, path) for j, v in enumerate(record[2:])]
        if not all(np.isfinite(values)):
            raise ParseError(f"Non-finite feature value for {key}", line_number, path)
        keys.append(key)
        rows.append(values)

    seen = set()
    duplicates = [k for k in keys if k in seen or seen.add(k)]
    if duplicates:
        raise DataError(f"Duplicate feature rows in {path}", keys=duplicates)
    logger.debug(f"Loaded {len(keys)} feature rows from {path} in {time.time() - start:.2f}s")
    matrix = np.array(rows, dtype=float).reshape(len(keys), len(names))
    return FeatureTable(names=names, keys=keys, matrix=matrix)


def save_performance_table(records: Sequence[PerformanceRecord], path: str) -> None:
    """Write records as CSV with the algorithm,problem_id,... header."""
    ordered = sorted(records, key=lambda r: r.key)
    frame = pd.DataFrame([r.to_dict() for r in ordered], columns=PERFORMANCE_COLUMNS)
    _write_frame(frame, path)
    logger.info(f"Wrote {len(ordered)} performance records to {path}")


def load_performance_table(path: str) -> List[PerformanceRecord]:
    """Read and validate a performance table.

    Raises:
        ParseError: Malformed row (with line number)
        DataError: Duplicate (algorithm, problem, instance, budget) or invalid values
    """
    frame = _read_raw(path, PERFORMANCE_COLUMNS)
    records = []
    seen = {}
    duplicates = []
    for i, (algorithm, pid, iid, budget, precision) in enumerate(frame.itertuples(index=False, name=None)):
        line_number = i + 2
        if not algorithm.strip():
            raise ParseError("Empty algorithm id", line_number, path)
        try:
            record = PerformanceRecord(
                algorithm_id=algorithm.strip(),
                problem_id=_parse_int(pid, "problem_id", line_number, path),
                instance_id=_parse_int(iid, "instance_id", line_number, path),
                budget=_parse_int(budget, "budget", line_number, path),
                target_precision=_parse_float(precision, "target_precision", line_number, path),
            )
        except ParseError:
            raise
        except DataError as e:
            raise DataError(f"{path}:{line_number}: {e}")
        if record.key in seen:
            duplicates.append((record.key, seen[record.key], line_number))
        else:
            seen[record.key] = line_number
        records.append(record)
    if duplicates:
        raise DataError(
            f"Duplicate performance rows in {path} (key, first line, repeat line)", keys=duplicates
        )
    logger.debug(f"Loaded {len(records)} performance records from {path}")
    return records


def save_design_sets(design_sets: Sequence[DesignSet], path: str) -> None:
    """Write sampled points and fitness: problem_id,instance_id,dim,seed,x1..xd,fitness."""
    _write_frame(design_set_table(design_sets), path)
    logger.info(f"Wrote {len(design_sets)} design sets to {path}")
