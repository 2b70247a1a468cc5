"""
Record schema for looped runs.

JSON- and CSV-serializable Pydantic models for stored task instances,
verification reports and per-iteration convergence records.
"""

from typing import Annotated, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from looped_core import BoundReport, EquivalenceReport, TaskInstance

TASK_FORMAT = "looped-task"
REPORT_FORMAT = "looped-report"
FORMAT_VERSION = 1

CSV_COLUMNS = ("n", "d", "trial", "seed", "kappa", "t", "emp_err", "bound", "norm_log_err")
SUMMARY_COLUMNS = ("n", "trials", "mean_kappa", "mean_final_err", "mean_slope", "violations")
PLOT_COLUMNS = ("n", "t", "mean_norm_log_err", "bound_log")


def format_cell(value: object) -> str:
    """CSV text for one value: integers as-is, floats as the shortest round-trip repr."""
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return repr(float(value))  # type: ignore[arg-type]


class TaskRecord(BaseModel):
    """On-disk form of a TaskInstance; arrays are nested lists, X is row-major."""

    format: Literal["looped-task"] = TASK_FORMAT
    version: Literal[1] = FORMAT_VERSION
    n: int = Field(..., ge=1)
    d: int = Field(..., ge=1)
    alpha: float
    seed: int = Field(0, ge=0, lt=2**64)
    x: List[List[float]] = Field(..., alias="X")
    y: List[float]
    theta_star: List[float]
    q0: List[float]

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    @model_validator(mode="after")
    def _check_shapes(self) -> "TaskRecord":
        if len(self.x) != self.n or any(len(row) != self.d for row in self.x):
            raise ValueError(f"X must be {self.n} rows of {self.d} values")
        if len(self.y) != self.n:
            raise ValueError(f"y must have {self.n} values")
        if len(self.theta_star) != self.d or len(self.q0) != self.d:
            raise ValueError(f"theta_star and q0 must have {self.d} values")
        return self


Report = Annotated[Union[EquivalenceReport, BoundReport], Field(discriminator="kind")]


class ReportRecord(BaseModel):
    """A batch of verification reports as written by ``verify --out``."""

    format: Literal["looped-report"] = REPORT_FORMAT
    version: Literal[1] = FORMAT_VERSION
    reports: List[Report] = Field(default_factory=list)

    model_config = ConfigDict(extra="forbid")


class ConvergenceRecord(BaseModel):
    """One CSV row: the state of one trial after t loops."""

    n: int = Field(..., ge=1)
    d: int = Field(..., ge=1)
    trial: int = Field(..., ge=0)
    seed: int = Field(..., ge=0, lt=2**64)
    kappa: float = Field(..., ge=1.0)
    t: int = Field(..., ge=0)
    emp_err: float = Field(..., ge=0.0, description="|<-q^(t), theta*> - alpha|")
    bound: float = Field(..., ge=0.0, description="|alpha| exp(-t / (2 kappa))")
    norm_log_err: float = Field(
        ..., description="log(||theta^(t) - theta*||^2 / ||theta^(0) - theta*||^2), floored at log(1e-300)"
    )

    model_config = ConfigDict(extra="forbid", frozen=True)

    @model_validator(mode="after")
    def _check_start(self) -> "ConvergenceRecord":
        if self.t == 0 and self.norm_log_err != 0.0:
            raise ValueError("norm_log_err must be 0 at t = 0")
        return self

    def csv_row(self) -> List[str]:
        """Values in CSV_COLUMNS order; floats use the shortest round-trip repr."""
        return [format_cell(getattr(self, column)) for column in CSV_COLUMNS]


class TrialSummary(BaseModel):
    """Per-n aggregates of an experiment sweep."""

    n: int = Field(..., ge=1)
    trials: int = Field(..., ge=1)
    mean_kappa: float
    mean_final_err: float
    mean_slope: Optional[float] = Field(
        None, description="Mean fitted slope of norm_log_err vs t; None when no trial had enough points"
    )
    violations: int = Field(0, ge=0)

    model_config = ConfigDict(extra="forbid", frozen=True)

    def csv_row(self) -> List[str]:
        return [format_cell(getattr(self, column)) for column in SUMMARY_COLUMNS]


class PlotPoint(BaseModel):
    """Per-n mean series point for external plotters."""

    n: int
    t: int
    mean_norm_log_err: float
    bound_log: float

    model_config = ConfigDict(extra="forbid", frozen=True)

    def csv_row(self) -> List[str]:
        return [format_cell(getattr(self, column)) for column in PLOT_COLUMNS]


def task_to_record(task: TaskInstance) -> TaskRecord:
    """Convert a TaskInstance into its on-disk record."""
    return TaskRecord(
        n=task.n,
        d=task.d,
        alpha=task.alpha,
        seed=task.seed,
        X=task.x.tolist(),
        y=task.y.tolist(),
        theta_star=task.theta_star.tolist(),
        q0=task.q0.tolist(),
    )


def record_to_task(record: TaskRecord) -> TaskInstance:
    """Rebuild the TaskInstance a record describes (validated again on the way in)."""
    return TaskInstance(
        x=np.array(record.x, dtype=np.float64),
        y=np.array(record.y, dtype=np.float64),
        theta_star=np.array(record.theta_star, dtype=np.float64),
        alpha=record.alpha,
        q0=np.array(record.q0, dtype=np.float64),
        seed=record.seed,
    )


__all__ = [
    "TASK_FORMAT",
    "REPORT_FORMAT",
    "FORMAT_VERSION",
    "CSV_COLUMNS",
    "SUMMARY_COLUMNS",
    "PLOT_COLUMNS",
    "format_cell",
    "TaskRecord",
    "Report",
    "ReportRecord",
    "ConvergenceRecord",
    "TrialSummary",
    "PlotPoint",
    "task_to_record",
    "record_to_task",
]
