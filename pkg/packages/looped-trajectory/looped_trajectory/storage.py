"""
Storage: write and load tasks, reports and convergence records to/from disk.
"""

import csv
import json
from pathlib import Path
from typing import Iterable, List, Sequence, Union

from looped_core import TaskInstance

from .schema import (
    CSV_COLUMNS,
    PLOT_COLUMNS,
    SUMMARY_COLUMNS,
    ConvergenceRecord,
    PlotPoint,
    Report,
    ReportRecord,
    TaskRecord,
    TrialSummary,
    record_to_task,
    task_to_record,
)

PathLike = Union[Path, str]


def _prepare(path: PathLike) -> Path:
    path = Path(path).expanduser()
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _write_json(data: dict, path: PathLike) -> None:
    with open(_prepare(path), "w", encoding="utf-8", newline="\n") as f:
        json.dump(data, f, ensure_ascii=False, indent=2)
        f.write("\n")


def _read_json(path: PathLike) -> dict:
    with open(Path(path).expanduser(), "r", encoding="utf-8") as f:
        data = json.load(f)
    if not isinstance(data, dict):
        raise ValueError(f"{path}: expected a JSON object")
    return data


def write_task(task: TaskInstance, path: PathLike) -> None:
    """Write a task instance to a JSON file (floats keep their exact value)."""
    _write_json(task_to_record(task).model_dump(mode="json", by_alias=True), path)


def load_task(path: PathLike) -> TaskInstance:
    """
    Load a task instance from a JSON file.

    Raises:
        OSError: File cannot be read
        json.JSONDecodeError: Not JSON
        pydantic.ValidationError: Not a valid task record or task
    """
    return record_to_task(TaskRecord.model_validate(_read_json(path)))


def write_reports(reports: Iterable[Report], path: PathLike) -> None:
    """Write verification reports to a JSON file."""
    record = ReportRecord(reports=list(reports))
    _write_json(record.model_dump(mode="json"), path)


def load_reports(path: PathLike) -> List[Report]:
    """Load verification reports from a JSON file."""
    return list(ReportRecord.model_validate(_read_json(path)).reports)


def _write_csv(header: Sequence[str], rows: Iterable[List[str]], path: PathLike) -> None:
    with open(_prepare(path), "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_records_csv(records: Iterable[ConvergenceRecord], path: PathLike) -> None:
    """
    Write convergence records with header ``n,d,trial,seed,kappa,t,emp_err,bound,norm_log_err``.

    Rows are written in the order given; callers pass canonical (n, trial, t) order.
    """
    _write_csv(CSV_COLUMNS, (r.csv_row() for r in records), path)


def load_records_csv(path: PathLike) -> List[ConvergenceRecord]:
    """
    Load convergence records from a CSV file written by ``write_records_csv``.

    Raises:
        ValueError: Header differs from the expected columns
        pydantic.ValidationError: A row does not form a valid record
    """
    with open(Path(path).expanduser(), "r", encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ValueError(f"{path}: expected columns {','.join(CSV_COLUMNS)}")
        return [ConvergenceRecord.model_validate(row) for row in reader]


def write_summary_csv(summaries: Iterable[TrialSummary], path: PathLike) -> None:
    """Write per-n summaries (empty mean_slope when none could be fitted)."""
    _write_csv(SUMMARY_COLUMNS, (s.csv_row() for s in summaries), path)


def write_plot_data(points: Iterable[PlotPoint], path: PathLike) -> None:
    """Write per-n mean series ``n,t,mean_norm_log_err,bound_log``."""
    _write_csv(PLOT_COLUMNS, (p.csv_row() for p in points), path)


def summary_path_for(output_path: PathLike) -> Path:
    """``convergence.csv`` -> ``convergence.summary.csv``."""
    path = Path(output_path)
    return path.with_name(f"{path.stem}.summary{path.suffix or '.csv'}")


__all__ = [
    "write_task",
    "load_task",
    "write_reports",
    "load_reports",
    "write_records_csv",
    "load_records_csv",
    "write_summary_csv",
    "write_plot_data",
    "summary_path_for",
]
