"""
looped-trajectory: convergence records and file formats for looped-transformer runs.
"""

from .schema import ConvergenceRecord, PlotPoint, ReportRecord, TaskRecord, TrialSummary
from .recorder import ConvergenceRecorder, fit_log_slope, plot_series, summarize_records
from .storage import (
    load_records_csv,
    load_reports,
    load_task,
    summary_path_for,
    write_plot_data,
    write_records_csv,
    write_reports,
    write_summary_csv,
    write_task,
)

__all__ = [
    "TaskRecord",
    "ReportRecord",
    "ConvergenceRecord",
    "TrialSummary",
    "PlotPoint",
    "ConvergenceRecorder",
    "fit_log_slope",
    "summarize_records",
    "plot_series",
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
