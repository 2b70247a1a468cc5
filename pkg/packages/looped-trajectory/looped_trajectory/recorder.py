"""
Convergence recorder: turns looped runs into ConvergenceRecords, summaries and plot series.
"""

import logging
import math
from collections import defaultdict
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from looped_core import (
    BoundParams,
    BoundViolationError,
    LoopTrajectory,
    TaskInstance,
    condition_number,
    theoretical_prediction_bound,
)
from looped_core.types import BOUND_SLACK

from .schema import ConvergenceRecord, PlotPoint, TrialSummary

logger = logging.getLogger(__name__)

# log(1e-300): floor of norm_log_err
LOG_FLOOR = math.log(1e-300)
# Squared parameter errors settle near 1e-32 in float64; fits ignore points below this.
SLOPE_NOISE_FLOOR = math.log(1e-26)
SLOPE_WINDOW = (10, 100)


def normalized_log_errors(task: TaskInstance, trajectory: LoopTrajectory) -> np.ndarray:
    """
    log(||theta^(t) - theta*||^2 / ||theta^(0) - theta*||^2) with theta^(t) = -q^(t) / alpha.

    Ratios are floored at 1e-300. A run that starts on theta* is 0 throughout.
    """
    theta = -trajectory.q_states / task.alpha
    sq = np.sum((theta - task.theta_star) ** 2, axis=1)
    if sq[0] == 0.0:
        return np.zeros_like(sq)
    ratio = np.maximum(sq / sq[0], 1e-300)
    out = np.log(ratio)
    out[0] = 0.0
    return out


def fit_log_slope(
    ts: Sequence[int],
    values: Sequence[float],
    window: Tuple[int, int] = SLOPE_WINDOW,
    noise_floor: float = SLOPE_NOISE_FLOOR,
) -> Optional[float]:
    """
    Least-squares slope of ``values`` against ``ts`` inside ``window``.

    Points at or below ``noise_floor`` are dropped. Returns None when fewer
    than two points remain.
    """
    t_arr = np.asarray(ts, dtype=np.float64)
    v_arr = np.asarray(values, dtype=np.float64)
    keep = (t_arr >= window[0]) & (t_arr <= window[1]) & (v_arr > noise_floor)
    if int(np.count_nonzero(keep)) < 2:
        return None
    slope, _ = np.polyfit(t_arr[keep], v_arr[keep], 1)
    return float(slope)


class ConvergenceRecorder:
    """
    Collects one ConvergenceRecord per (trial, t) and checks each against the bound.

    Use: record_trial(task, trajectory, trial) for each run, then records(),
    summaries() and plot_series(). With ``enforce_bound`` set, a record whose
    emp_err exceeds bound + 1e-9 is counted as a violation and logged;
    ``raise_for_violations`` turns those into a BoundViolationError.
    """

    def __init__(self, enforce_bound: bool = True, slack: float = BOUND_SLACK):
        self.enforce_bound = enforce_bound
        self.slack = slack
        self._records: List[ConvergenceRecord] = []
        self._violations: List[ConvergenceRecord] = []

    def record_trial(
        self,
        task: TaskInstance,
        trajectory: LoopTrajectory,
        trial: int = 0,
        kappa: Optional[float] = None,
    ) -> List[ConvergenceRecord]:
        """
        Build the records of one run and add them to the recorder.

        Args:
            task: The task that was run
            trajectory: Its looped trajectory (per-step errors required)
            trial: Trial index within the sweep
            kappa: Condition number of X^T X, computed when omitted

        Returns:
            The T+1 records of this run
        """
        errors = trajectory.per_step_errors
        if errors is None:
            raise ValueError("trajectory has no per-step errors to record")
        if kappa is None:
            kappa = condition_number(task.x).condition_number
        bounds = BoundParams(kappa=kappa, alpha=task.alpha)
        norm_log = normalized_log_errors(task, trajectory)

        records = [
            ConvergenceRecord(
                n=task.n,
                d=task.d,
                trial=trial,
                seed=task.seed,
                kappa=kappa,
                t=t,
                emp_err=float(errors[t]),
                bound=theoretical_prediction_bound(t, bounds),
                norm_log_err=float(norm_log[t]),
            )
            for t in range(trajectory.loops + 1)
        ]
        if self.enforce_bound:
            for record in records:
                if record.emp_err > record.bound + self.slack:
                    logger.warning(
                        "bound violated: n=%s trial=%s seed=%s t=%s emp_err=%r bound=%r",
                        record.n,
                        record.trial,
                        record.seed,
                        record.t,
                        record.emp_err,
                        record.bound,
                    )
                    self._violations.append(record)
        self._records.extend(records)
        return records

    @property
    def violations(self) -> List[ConvergenceRecord]:
        return list(self._violations)

    def raise_for_violations(self) -> None:
        """Raise BoundViolationError if any recorded row broke the bound."""
        if self._violations:
            first = self._violations[0]
            raise BoundViolationError(
                f"{len(self._violations)} record(s) exceed the bound; first at "
                f"n={first.n} trial={first.trial} seed={first.seed} t={first.t}"
            )

    def records(self) -> List[ConvergenceRecord]:
        """All records in canonical (n, trial, t) order."""
        return sorted(self._records, key=lambda r: (r.n, r.trial, r.t))

    def summaries(self) -> List[TrialSummary]:
        """Per-n mean kappa, mean final error, mean fitted slope and violation count."""
        return summarize_records(self.records(), self._violations)

    def plot_series(self) -> List[PlotPoint]:
        return plot_series(self.records())


def _by_trial(
    records: Sequence[ConvergenceRecord],
) -> Dict[int, Dict[int, List[ConvergenceRecord]]]:
    grouped: Dict[int, Dict[int, List[ConvergenceRecord]]] = defaultdict(lambda: defaultdict(list))
    for record in records:
        grouped[record.n][record.trial].append(record)
    for trials in grouped.values():
        for rows in trials.values():
            rows.sort(key=lambda r: r.t)
    return grouped


def summarize_records(
    records: Sequence[ConvergenceRecord],
    violations: Sequence[ConvergenceRecord] = (),
) -> List[TrialSummary]:
    """
    Aggregate records per n.

    The slope of each trial is fitted separately (``fit_log_slope``) and the
    per-n slope is the mean over trials that produced one.
    """
    violation_counts: Dict[int, int] = defaultdict(int)
    for record in violations:
        violation_counts[record.n] += 1

    summaries = []
    for n, trials in sorted(_by_trial(records).items()):
        kappas = [rows[0].kappa for rows in trials.values()]
        finals = [rows[-1].emp_err for rows in trials.values()]
        slopes = [
            s
            for s in (
                fit_log_slope([r.t for r in rows], [r.norm_log_err for r in rows])
                for rows in trials.values()
            )
            if s is not None
        ]
        summaries.append(
            TrialSummary(
                n=n,
                trials=len(trials),
                mean_kappa=float(np.mean(kappas)),
                mean_final_err=float(np.mean(finals)),
                mean_slope=float(np.mean(slopes)) if slopes else None,
                violations=violation_counts[n],
            )
        )
    return summaries


def plot_series(records: Sequence[ConvergenceRecord]) -> List[PlotPoint]:
    """
    Per-n mean series (t, mean norm_log_err, mean log bound).

    The log bound of a trial is log|alpha| - t / (2 kappa), with |alpha| read
    from its t = 0 bound, so it stays finite where the bound itself underflows.
    """
    points: List[PlotPoint] = []
    for n, trials in sorted(_by_trial(records).items()):
        series: Dict[int, List[Tuple[float, float]]] = defaultdict(list)
        for rows in trials.values():
            start = rows[0]
            if start.t != 0:
                raise ValueError(f"trial {start.trial} for n={n} has no t = 0 record")
            log_alpha = math.log(start.bound)
            for r in rows:
                series[r.t].append((r.norm_log_err, log_alpha - r.t / (2.0 * r.kappa)))
        for t in sorted(series):
            values = np.array(series[t])
            points.append(
                PlotPoint(
                    n=n,
                    t=t,
                    mean_norm_log_err=float(values[:, 0].mean()),
                    bound_log=float(values[:, 1].mean()),
                )
            )
    return points


__all__ = [
    "LOG_FLOOR",
    "SLOPE_NOISE_FLOOR",
    "SLOPE_WINDOW",
    "normalized_log_errors",
    "fit_log_slope",
    "ConvergenceRecorder",
    "summarize_records",
    "plot_series",
]
