"""
Convergence sweep: independent trials per n, recorded in canonical order.

Each (n, trial) pair draws its task from its own seed (base_seed + trial), so
trials can run on any number of worker threads without changing a single
output byte.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Tuple, TypeVar

from pydantic import BaseModel, ConfigDict

from looped_core import (
    BoundReport,
    LoopConfig,
    LoopTrajectory,
    RandomSource,
    TaskInstance,
    check_bound,
    condition_number,
    make_task,
    run_loops,
)
from looped_trajectory import ConvergenceRecord, ConvergenceRecorder, PlotPoint, TrialSummary

from .config import ExperimentConfig

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


class TrialRun(BaseModel):
    """One finished trial: its task, trajectory, kappa and bound report."""

    trial: int
    task: TaskInstance
    trajectory: LoopTrajectory
    kappa: float
    bound_report: BoundReport

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)


class ExperimentResult(BaseModel):
    """Records, per-n summaries and plot series of a sweep."""

    records: List[ConvergenceRecord]
    summaries: List[TrialSummary]
    plot_points: List[PlotPoint]
    failed_seeds: List[int]

    model_config = ConfigDict(frozen=True)

    @property
    def passed(self) -> bool:
        return not self.failed_seeds and all(s.violations == 0 for s in self.summaries)


def map_trials(fn: Callable[[T], R], jobs: Iterable[T], workers: int = 1) -> List[R]:
    """Apply ``fn`` to every job, on a thread pool when ``workers`` > 1; results keep job order."""
    jobs = list(jobs)
    if workers <= 1 or len(jobs) <= 1:
        return [fn(job) for job in jobs]
    with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="looped-trial") as pool:
        return list(pool.map(fn, jobs))


def run_trial(config: ExperimentConfig, n: int, trial: int) -> TrialRun:
    """
    Run one trial of the sweep: fresh task from seed base_seed + trial, T loops at eta = 1/L.

    Args:
        config: Sweep settings
        n: Number of in-context examples
        trial: Trial index (0-based)

    Returns:
        TrialRun with the bound report of the same trajectory that gets recorded
    """
    task = make_task(n, config.d, config.alpha, RandomSource.for_trial(config.base_seed, trial))
    trajectory = run_loops(task, LoopConfig(loops=config.loops))
    kappa = condition_number(task.x).condition_number
    report = check_bound(task, config.loops, trajectory=trajectory)
    return TrialRun(
        trial=trial, task=task, trajectory=trajectory, kappa=kappa, bound_report=report
    )


def run_experiment(config: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    """
    Run every (n, trial) of the sweep and collect records in (n, trial, t) order.

    Args:
        config: Sweep settings
        workers: Worker threads for the trial batch

    Returns:
        ExperimentResult; ``passed`` is False when any record broke the bound
    """
    jobs: List[Tuple[int, int]] = [(n, trial) for n in config.n_values for trial in range(config.trials)]
    logger.info(
        "Running %s trials (n=%s, d=%s, T=%s) on %s worker(s)",
        len(jobs),
        config.n_values,
        config.d,
        config.loops,
        workers,
    )
    runs = map_trials(lambda job: run_trial(config, *job), jobs, workers)

    recorder = ConvergenceRecorder()
    failed_seeds: List[int] = []
    for run in sorted(runs, key=lambda r: (r.task.n, r.trial)):
        recorder.record_trial(run.task, run.trajectory, trial=run.trial, kappa=run.kappa)
        if not run.bound_report.passed:
            failed_seeds.append(run.task.seed)

    summaries = recorder.summaries()
    for s in summaries:
        logger.info(
            "n=%s mean_kappa=%.4g mean_final_err=%.3e mean_slope=%s violations=%s",
            s.n,
            s.mean_kappa,
            s.mean_final_err,
            s.mean_slope,
            s.violations,
        )
    return ExperimentResult(
        records=recorder.records(),
        summaries=summaries,
        plot_points=recorder.plot_series(),
        failed_seeds=failed_seeds,
    )


__all__ = ["TrialRun", "ExperimentResult", "map_trials", "run_trial", "run_experiment"]
