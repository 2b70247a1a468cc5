"""
Cross-checks between the looped transformer and explicit gradient descent.

Each check runs both engines (or both attention paths) on the same input and
turns their disagreement into a report or a boolean. Failures are logged at
WARNING; nothing here raises on a failed comparison, only on inputs that fall
outside a check's hypotheses.
"""

import logging
import math
from typing import List, Optional

import numpy as np

from .attention import attn_closed_form, attn_general, default_params, embed_query_row
from .errors import (
    DimensionError,
    HypothesisViolationError,
    InvalidQueryError,
    ScheduleMismatchError,
)
from .gd_oracle import (
    RegressionProblem,
    bound_params_for,
    log_theoretical_prediction_bound,
    run_gd,
    theoretical_prediction_bound,
)
from .looped_tf import loop_step, run_loops
from .spectral import spectral_norm
from .task import RandomSource, assemble_prompt
from .types import (
    BOUND_SLACK,
    AutoSchedule,
    BoundReport,
    EquivalenceReport,
    LoopConfig,
    LoopTrajectory,
    PromptState,
    StepSchedule,
    TaskInstance,
)

logger = logging.getLogger(__name__)

DEFAULT_EQUIVALENCE_TOL = 1e-9
DEFAULT_ATTENTION_ATOL = 1e-12
# Below this both sides of a bound comparison are compared through their logs.
LOG_COMPARE_FLOOR = 1e-300


def equivalence_scale(task: TaskInstance, smoothness: float) -> float:
    """max(1, |alpha|, ||X^T y||_inf, L): the magnitude the state gaps are measured against."""
    xty = task.x.T @ task.y
    return max(1.0, abs(task.alpha), float(np.max(np.abs(xty))), smoothness)


def check_equivalence(
    task: TaskInstance,
    config: LoopConfig,
    tol: float = DEFAULT_EQUIVALENCE_TOL,
) -> EquivalenceReport:
    """
    Compare every looped state q^(t) with -alpha * theta^(t) from gradient descent.

    GD starts at theta^(0) = -q^(0) / alpha and uses the same step schedule.

    Args:
        task: Task instance
        config: Loop count and step schedule shared by both engines
        tol: Relative tolerance, scaled by ``equivalence_scale``

    Returns:
        EquivalenceReport with the largest state gap and the output gap

    Raises:
        InvalidQueryError: alpha == 0
    """
    if tol <= 0.0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    if task.alpha == 0.0:
        raise InvalidQueryError("theta^(0) = -q^(0)/alpha is undefined for alpha = 0")

    problem = RegressionProblem.from_data(task.x, task.y)
    tf_run = run_loops(task, config)
    gd_run = run_gd(problem, -task.q0 / task.alpha, config)

    shadow = task.alpha * gd_run.theta_states
    max_state_gap = float(np.max(np.abs(tf_run.q_states + shadow)))
    output_gap = float(np.max(np.abs(tf_run.tf_output - shadow[-1])))
    tolerance = tol * equivalence_scale(task, problem.smoothness)

    passed = max_state_gap <= tolerance and output_gap <= tolerance
    report = EquivalenceReport(
        instance_seed=task.seed,
        max_state_gap=max_state_gap,
        output_gap=output_gap,
        passed=passed,
        tolerance=tolerance,
    )
    if not passed:
        logger.warning("equivalence check failed: %s", report.summary_line())
    return report


def _margin(empirical: float, bound: float, log_bound: float) -> float:
    """
    bound - empirical, or, when both sides are below LOG_COMPARE_FLOOR, the log
    ratio log(bound / empirical) clipped at 0 so an overshoot by more than a
    factor 1 + BOUND_SLACK still fails.
    """
    if empirical < LOG_COMPARE_FLOOR and bound < LOG_COMPARE_FLOOR:
        if empirical <= 0.0:
            return 0.0
        if log_bound == -math.inf:
            return -math.inf
        return min(0.0, log_bound - math.log(empirical))
    return bound - empirical


def check_bound(
    task: TaskInstance,
    loops: int,
    schedule: Optional[StepSchedule] = None,
    trajectory: Optional[LoopTrajectory] = None,
) -> BoundReport:
    """
    Compare the per-step prediction error against |alpha| exp(-t / (2 kappa)).

    Args:
        task: Task with q^(0) = 0
        loops: Loop count T
        schedule: Step schedule; must be the eta = 1/L one (auto by default)
        trajectory: An existing run of this task to check instead of re-running,
            so the margins describe exactly the states that were emitted

    Returns:
        BoundReport with one margin (bound - empirical) per t = 0..T

    Raises:
        HypothesisViolationError: q^(0) != 0 or the schedule is not eta = 1/L
    """
    if np.any(task.q0 != 0.0):
        raise HypothesisViolationError("the prediction bound assumes q^(0) = 0")
    config = LoopConfig(loops=loops, step_schedule=schedule or AutoSchedule())
    problem = RegressionProblem.from_data(task.x, task.y)
    try:
        # theta^(0) = 0 and ||theta*|| = 1, so R = 1.
        bounds = bound_params_for(problem, config, np.zeros(task.d), alpha=task.alpha)
    except ScheduleMismatchError as e:
        raise HypothesisViolationError(str(e)) from e

    if trajectory is None:
        trajectory = run_loops(task, config)
    elif trajectory.loops != loops or trajectory.per_step_errors is None:
        raise DimensionError(f"trajectory must hold {loops} loops with per-step errors")
    errors = trajectory.per_step_errors
    assert errors is not None

    margins: List[float] = [
        _margin(
            float(errors[t]),
            theoretical_prediction_bound(t, bounds),
            log_theoretical_prediction_bound(t, bounds),
        )
        for t in range(loops + 1)
    ]
    min_margin = min(margins)
    report = BoundReport(
        instance_seed=task.seed,
        kappa=bounds.kappa,
        per_step_margin=margins,
        min_margin=min_margin,
        passed=min_margin >= -BOUND_SLACK,
    )
    if not report.passed:
        worst = int(np.argmin(margins))
        logger.warning("bound violated at t=%s: %s", worst, report.summary_line())
    return report


def attention_paths_agree(prompt: PromptState, atol: float = DEFAULT_ATTENTION_ATOL) -> bool:
    """
    True when the general attention formula reduces to the closed form on ``prompt``.

    The query block must agree entrywise within ``atol`` (absolute) and every
    other entry of the general output must be exactly zero.
    """
    n, d = prompt.n, prompt.d
    general = attn_general(prompt, default_params(n, d))
    closed = attn_closed_form(prompt.x, prompt.y, prompt.q, prompt.alpha)

    masked = general - embed_query_row(general[n, :d], n, d)
    if np.any(masked != 0.0):
        logger.warning("masked attention entries are not exactly zero (n=%s, d=%s)", n, d)
        return False
    gap = float(np.max(np.abs(general[n, :d] - closed)))
    if gap > atol:
        logger.warning("attention paths differ by %.3e (limit %.3e, n=%s, d=%s)", gap, atol, n, d)
        return False
    return True


def check_attention_oracle(
    n: int,
    d: int,
    trials: int,
    rng: RandomSource,
    atol: float = DEFAULT_ATTENTION_ATOL,
) -> bool:
    """
    Compare both attention paths on ``trials`` random prompts.

    Prompts have Gaussian X, y and q (so q is generally nonzero) and a
    Gaussian alpha; the labels need not be realizable for this check.

    Returns:
        True iff every trial agrees (see ``attention_paths_agree``)
    """
    if n < 1 or d < 1:
        raise DimensionError(f"n and d must be positive, got n={n}, d={d}")
    if trials < 0:
        raise ValueError(f"trials must be >= 0, got {trials}")

    ok = True
    for trial in range(trials):
        z = rng.standard_normal((n + 1, d + 1))
        if not attention_paths_agree(PromptState(z=z, n=n, d=d), atol):
            logger.warning("attention oracle failed on trial %s (%r)", trial, rng)
            ok = False
    return ok


def check_frozen_context(task: TaskInstance, config: LoopConfig) -> bool:
    """
    Run the literal recursion Z <- Z - eta Attn(Z) and check that the context
    rows and the alpha entry stay bit-identical to Z^(0).
    """
    prompt = assemble_prompt(task)
    initial = prompt.z
    smoothness = 0.0
    if isinstance(config.step_schedule, AutoSchedule):
        smoothness = spectral_norm(task.x.T @ task.x)
    params = default_params(task.n, task.d)

    n, d = task.n, task.d
    for t, eta in enumerate(config.step_sizes(smoothness)):
        prompt = loop_step(prompt, float(eta), params, path="general")
        z = prompt.z
        if not np.array_equal(z[:n], initial[:n]) or z[n, d] != initial[n, d]:
            logger.warning("context changed at loop %s (seed=%s)", t + 1, task.seed)
            return False
    return True


__all__ = [
    "DEFAULT_EQUIVALENCE_TOL",
    "DEFAULT_ATTENTION_ATOL",
    "equivalence_scale",
    "check_equivalence",
    "check_bound",
    "attention_paths_agree",
    "check_attention_oracle",
    "check_frozen_context",
]
