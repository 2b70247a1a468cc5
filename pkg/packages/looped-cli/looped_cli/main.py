"""
Main entry point for the looped CLI.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Callable, List, Optional, Tuple, TypeVar, Union

import numpy as np
from pydantic import ValidationError

from looped_core import (
    AutoSchedule,
    BoundReport,
    ConstantSchedule,
    DimensionError,
    EquivalenceReport,
    HypothesisViolationError,
    InvalidQueryError,
    LoopConfig,
    LoopedError,
    RandomSource,
    ScheduleMismatchError,
    StepSchedule,
    TaskInstance,
    UnderdeterminedError,
    check_attention_oracle,
    check_bound,
    check_equivalence,
    check_frozen_context,
    make_task,
    run_loops,
)

from looped_trajectory import (
    ConvergenceRecorder,
    load_records_csv,
    load_task,
    plot_series,
    summary_path_for,
    write_plot_data,
    write_records_csv,
    write_reports,
    write_summary_csv,
    write_task,
)

from . import __version__
from .config import ExperimentConfig, load_experiment_config, resolve_worker_count
from .experiment import map_trials, run_experiment

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_BAD_ARGS = 2
EXIT_IO = 3
EXIT_MALFORMED = 4

LOG_FORMAT = "%(asctime)s %(name)s: %(levelname)s: %(message)s"

M = TypeVar("M")


class MalformedInputError(Exception):
    """An input file exists but does not hold what it should."""

    pass


def _load(loader: Callable[[Path], M], path: str) -> M:
    """Run a file loader, folding decode/validation failures into MalformedInputError."""
    try:
        return loader(Path(path))
    except (json.JSONDecodeError, ValidationError, KeyError, ValueError) as e:
        raise MalformedInputError(f"{path}: {e}") from e


_installed_handlers: List[logging.Handler] = []


def setup_logging(debug: bool = False, log_file: Optional[str] = None) -> None:
    """Send logs to stderr (INFO, or DEBUG with --debug) and optionally to a file."""
    level = logging.DEBUG if debug else logging.INFO
    root = logging.getLogger()
    for handler in _installed_handlers:
        root.removeHandler(handler)
        handler.close()
    _installed_handlers.clear()

    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if log_file:
        Path(log_file).expanduser().parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(Path(log_file).expanduser(), encoding="utf-8"))
    for handler in handlers:
        handler.setLevel(level)
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        root.addHandler(handler)
        _installed_handlers.append(handler)
    root.setLevel(level)


def _parse_eta(value: str) -> Optional[float]:
    if value == "auto":
        return None
    try:
        eta = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive number or 'auto', got {value!r}")
    if not np.isfinite(eta) or eta <= 0.0:
        raise argparse.ArgumentTypeError(f"step size must be positive, got {value!r}")
    return eta


def _schedule(eta: Optional[float]) -> StepSchedule:
    return AutoSchedule() if eta is None else ConstantSchedule(eta=eta)


def _task_from_args(args: argparse.Namespace) -> TaskInstance:
    if args.task:
        return _load(load_task, args.task)
    return make_task(args.n, args.d, args.alpha, RandomSource(args.seed))


def cmd_gen(args: argparse.Namespace) -> int:
    """Write one seeded task instance to a JSON file."""
    task = make_task(args.n, args.d, args.alpha, RandomSource(args.seed))
    write_task(task, args.out)
    logger.info("Wrote task n=%s d=%s seed=%s to %s", task.n, task.d, task.seed, args.out)
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    """Run one simulation, print the final prediction error and optionally write the CSV."""
    task = _task_from_args(args)
    config = LoopConfig(loops=args.loops, step_schedule=_schedule(args.eta))
    trajectory = run_loops(task, config)

    # The bound only covers eta = 1/L from q0 = 0.
    bound_applies = args.eta is None and not np.any(task.q0 != 0.0)
    recorder = ConvergenceRecorder(enforce_bound=bound_applies)
    recorder.record_trial(task, trajectory)
    if args.out:
        write_records_csv(recorder.records(), args.out)
        logger.info("Wrote %s records to %s", args.loops + 1, args.out)

    errors = trajectory.per_step_errors
    assert errors is not None
    print(f"{float(errors[-1]):.17g}")
    if recorder.violations:
        first = recorder.violations[0]
        print(f"Error: bound violated at t={first.t} (seed {first.seed})", file=sys.stderr)
        return EXIT_VERIFY_FAILED
    return EXIT_OK


VerifyReport = Union[EquivalenceReport, BoundReport]


def cmd_verify(args: argparse.Namespace) -> int:
    """Run the attention oracle, the equivalence check and the bound check over a batch."""
    if args.task:
        tasks = [_load(load_task, args.task)]
    else:
        tasks = [
            make_task(args.n, args.d, args.alpha, RandomSource.for_trial(args.seed, i))
            for i in range(args.trials)
        ]
    n, d = tasks[0].n, tasks[0].d
    config = LoopConfig(
        loops=args.loops, step_schedule=_schedule(args.eta), inject_fault=args.inject_fault
    )

    oracle_ok = check_attention_oracle(n, d, len(tasks), RandomSource(args.seed))
    print(f"kind=attention n={n} d={d} trials={len(tasks)} passed={oracle_ok}")

    def verify_one(task: TaskInstance) -> Tuple[List[VerifyReport], bool]:
        reports: List[VerifyReport] = [check_equivalence(task, config)]
        if args.eta is None and not np.any(task.q0 != 0.0):
            reports.append(check_bound(task, args.loops))
        return reports, check_frozen_context(task, config)

    results = map_trials(verify_one, tasks, resolve_worker_count())

    all_reports: List[VerifyReport] = []
    first_failure: Optional[int] = None
    for task, (reports, frozen) in zip(tasks, results):
        for report in reports:
            print(report.summary_line())
        if not frozen:
            print(f"seed={task.seed} kind=frozen_context passed=False")
        if first_failure is None and not (frozen and all(r.passed for r in reports)):
            first_failure = task.seed
        all_reports.extend(reports)

    if args.out:
        write_reports(all_reports, args.out)

    if not oracle_ok:
        print("Error: attention paths disagree", file=sys.stderr)
        return EXIT_VERIFY_FAILED
    if first_failure is not None:
        print(f"Error: verification failed, first failing seed {first_failure}", file=sys.stderr)
        return EXIT_VERIFY_FAILED
    return EXIT_OK


def _experiment_config(args: argparse.Namespace) -> ExperimentConfig:
    overrides = dict(
        d=args.d,
        n_values=args.n,
        loops=args.loops,
        trials=args.trials,
        base_seed=args.seed,
        alpha=args.alpha,
        output_path=args.out,
    )
    if args.config:
        return _load(lambda p: load_experiment_config(p, **overrides), args.config)
    return ExperimentConfig(**{k: v for k, v in overrides.items() if v is not None})


def cmd_experiment(args: argparse.Namespace) -> int:
    """Run the convergence sweep and write records, summaries and (optionally) plot data."""
    config = _experiment_config(args)
    result = run_experiment(config, workers=resolve_worker_count())

    write_records_csv(result.records, config.output_path)
    summary_path = summary_path_for(config.output_path)
    write_summary_csv(result.summaries, summary_path)
    if args.plot_data:
        write_plot_data(result.plot_points, args.plot_data)
    logger.info("Wrote %s records to %s", len(result.records), config.output_path)

    for s in result.summaries:
        slope = "" if s.mean_slope is None else f"{s.mean_slope:.6g}"
        print(
            f"n={s.n} trials={s.trials} mean_kappa={s.mean_kappa:.6g} "
            f"mean_final_err={s.mean_final_err:.6g} mean_slope={slope} violations={s.violations}"
        )
    if not result.passed:
        print(
            f"Error: bound violated (failing seeds: {result.failed_seeds or 'see log'})",
            file=sys.stderr,
        )
        return EXIT_VERIFY_FAILED
    return EXIT_OK


def cmd_plot_data(args: argparse.Namespace) -> int:
    """Reshape a convergence CSV into per-n mean series."""
    records = _load(load_records_csv, args.csv)
    write_plot_data(plot_series(records), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--debug", action="store_true", help="Enable DEBUG logging")
    common.add_argument("--log-file", help="Also write logs to this file")

    task_flags = argparse.ArgumentParser(add_help=False)
    task_flags.add_argument("--n", type=int, default=32, help="In-context examples (default: 32)")
    task_flags.add_argument("--d", type=int, default=4, help="Feature dimension (default: 4)")
    task_flags.add_argument("--alpha", type=float, default=1.0, help="Query scalar (default: 1.0)")
    task_flags.add_argument("--seed", type=int, default=0, help="Random seed (default: 0)")

    loop_flags = argparse.ArgumentParser(add_help=False)
    loop_flags.add_argument("--loops", "-T", type=int, default=200, help="Loop count (default: 200)")
    loop_flags.add_argument(
        "--eta", type=_parse_eta, default=None, help="Step size, or 'auto' for 1/L (default: auto)"
    )

    parser = argparse.ArgumentParser(
        prog="looped",
        description="Linear looped transformers simulated against multi-step gradient descent",
    )
    parser.add_argument("--version", action="version", version=f"looped {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", parents=[common, task_flags], help="Write a seeded task to JSON")
    gen.add_argument("--out", required=True, help="Task file to write")
    gen.set_defaults(handler=cmd_gen)

    run = sub.add_parser(
        "run", parents=[common, task_flags, loop_flags], help="Run one simulation"
    )
    run.add_argument("--task", help="Task file (overrides --n/--d/--alpha/--seed)")
    run.add_argument("--out", help="Per-iteration CSV to write")
    run.set_defaults(handler=cmd_run)

    verify = sub.add_parser(
        "verify", parents=[common, task_flags, loop_flags], help="Verify a batch of tasks"
    )
    verify.add_argument("--trials", type=int, default=10, help="Tasks to verify (default: 10)")
    verify.add_argument("--task", help="Verify this task file instead of random tasks")
    verify.add_argument(
        "--inject-fault", action="store_true", help="Flip the label-term sign (must fail)"
    )
    verify.add_argument("--out", help="JSON file for the reports")
    verify.set_defaults(handler=cmd_verify)

    experiment = sub.add_parser("experiment", parents=[common], help="Run the convergence sweep")
    experiment.add_argument("--config", help="JSON experiment config; flags override it")
    experiment.add_argument("--n", type=int, nargs="+", help="Sample sizes (default: 16 32 64 128)")
    experiment.add_argument("--d", type=int, help="Feature dimension (default: 4)")
    experiment.add_argument("--loops", "-T", type=int, help="Loop count (default: 200)")
    experiment.add_argument("--trials", type=int, help="Trials per n (default: 10)")
    experiment.add_argument("--seed", type=int, help="Base seed (default: 0)")
    experiment.add_argument("--alpha", type=float, help="Query scalar (default: 1.0)")
    experiment.add_argument("--out", help="Records CSV (default: convergence.csv)")
    experiment.add_argument("--plot-data", help="Also write per-n mean series here")
    experiment.set_defaults(handler=cmd_experiment)

    plot = sub.add_parser("plot-data", parents=[common], help="Reshape a CSV into mean series")
    plot.add_argument("csv", help="Convergence CSV written by run or experiment")
    plot.add_argument("--out", required=True, help="Plot-data CSV to write")
    plot.set_defaults(handler=cmd_plot_data)
    return parser


def _check_args(args: argparse.Namespace) -> None:
    for name in ("trials", "loops"):
        value = getattr(args, name, None)
        if value is not None and value < (1 if name == "trials" else 0):
            raise ValueError(f"--{name} must be >= {1 if name == 'trials' else 0}, got {value}")
    if getattr(args, "seed", None) is not None and args.seed < 0:
        raise ValueError(f"--seed must be >= 0, got {args.seed}")


def main(argv: Optional[List[str]] = None) -> int:
    """
    Main entry point.

    Args:
        argv: Command line arguments (defaults to sys.argv[1:])

    Returns:
        Exit code: 0 success, 1 verification failure, 2 invalid arguments,
        3 I/O error, 4 malformed input file
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else EXIT_BAD_ARGS

    try:
        setup_logging(args.debug, args.log_file)
    except OSError as e:
        print(f"Error: cannot open log file: {e}", file=sys.stderr)
        return EXIT_IO

    try:
        _check_args(args)
        return int(args.handler(args))
    except MalformedInputError as e:
        print(f"Error: malformed input: {e}", file=sys.stderr)
        return EXIT_MALFORMED
    except OSError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_IO
    except (
        UnderdeterminedError,
        InvalidQueryError,
        HypothesisViolationError,
        ScheduleMismatchError,
        DimensionError,
        ValidationError,
        ValueError,
    ) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_BAD_ARGS
    except LoopedError as e:
        logger.exception("Run failed")
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_VERIFY_FAILED


__all__ = ["main", "build_parser", "setup_logging", "MalformedInputError"]


if __name__ == "__main__":
    sys.exit(main())
