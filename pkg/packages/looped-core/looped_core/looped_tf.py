"""
Linear looped transformer: Z^(t) = Z^(t-1) - eta^(t-1) Attn(Z^(t-1); Q, P).

The prompt's context rows and the alpha entry never change; only the query
row q^(t) evolves. The transformer's output is TF(Z^(0)) = -q^(T).
"""

import logging
from typing import Literal, Optional

import numpy as np

from .attention import attn_closed_form, attn_general, default_params
from .errors import DimensionError
from .spectral import spectral_norm
from .types import (
    AttentionParams,
    AutoSchedule,
    LoopConfig,
    LoopTrajectory,
    PromptState,
    RealVector,
    TaskInstance,
    as_vector,
)
from .task import assemble_prompt

logger = logging.getLogger(__name__)

AttentionPath = Literal["closed_form", "general"]


def loop_step(
    prompt: PromptState,
    eta: float,
    params: Optional[AttentionParams] = None,
    *,
    path: AttentionPath = "closed_form",
    inject_fault: bool = False,
) -> PromptState:
    """
    Apply one loop Z <- Z - eta * Attn(Z; Q, P).

    The closed-form path evaluates the default construction (Q = I,
    P = blockdiag(I, 0), causal mask) and writes only the query row; the
    general path subtracts the full matrix formula, whose other entries are
    exact zeros for the default construction. Any other ``params`` go
    through the general path.

    Args:
        prompt: Current prompt state
        eta: Step size, strictly positive
        params: Attention parameters (default construction when omitted)
        path: "closed_form" or "general"
        inject_fault: Flip the label-term sign in the closed form

    Returns:
        New prompt state

    Raises:
        DimensionError: params do not conform with the prompt
    """
    if not np.isfinite(eta) or eta <= 0.0:
        raise ValueError(f"step size must be finite and positive, got {eta!r}")
    if params is not None and params.mask.shape != (prompt.n + 1, prompt.n + 1):
        raise DimensionError(
            f"mask must be {(prompt.n + 1, prompt.n + 1)} for this prompt, got {params.mask.shape}"
        )

    if params is not None and not _is_default_construction(params, prompt.n, prompt.d):
        path = "general"
    if path == "general":
        attn = attn_general(prompt, params or default_params(prompt.n, prompt.d))
        return PromptState(z=prompt.z - eta * attn, n=prompt.n, d=prompt.d)

    update = attn_closed_form(
        prompt.x, prompt.y, prompt.q, prompt.alpha, flip_label_sign=inject_fault
    )
    return prompt.with_query(prompt.q - eta * update)


def _is_default_construction(params: AttentionParams, n: int, d: int) -> bool:
    default = default_params(n, d)
    return (
        np.array_equal(params.query_key, default.query_key)
        and np.array_equal(params.value_output, default.value_output)
        and np.array_equal(params.mask, default.mask)
    )


def prediction_error(output: RealVector, theta_star: RealVector, alpha: float) -> float:
    """
    Prediction error |<output, theta*> - alpha| of a generated vector.

    Raises:
        DimensionError: output and theta_star differ in length
    """
    output = as_vector(output, "output")
    theta_star = as_vector(theta_star, "theta_star")
    if output.shape != theta_star.shape:
        raise DimensionError(
            f"output has length {output.shape[0]}, theta_star has {theta_star.shape[0]}"
        )
    return abs(float(output @ theta_star) - alpha)


def run_loops(task: TaskInstance, config: LoopConfig) -> LoopTrajectory:
    """
    Run the looped transformer T times from Z^(0) and record every q^(t).

    Args:
        task: Task providing X, y, alpha, q0 and theta*
        config: Loop count, step schedule and engine switches

    Returns:
        LoopTrajectory with T+1 states, tf_output = -q^(T) and per-step
        prediction errors |<-q^(t), theta*> - alpha|
    """
    prompt = assemble_prompt(task)
    smoothness = 0.0
    if isinstance(config.step_schedule, AutoSchedule):
        smoothness = spectral_norm(task.x.T @ task.x)
    etas = config.step_sizes(smoothness)
    params = default_params(task.n, task.d) if config.attention_path == "general" else None

    states = np.empty((config.loops + 1, task.d))
    states[0] = prompt.q
    for t, eta in enumerate(etas):
        prompt = loop_step(
            prompt,
            float(eta),
            params,
            path=config.attention_path,
            inject_fault=config.inject_fault,
        )
        states[t + 1] = prompt.q

    errors = np.array([prediction_error(-q, task.theta_star, task.alpha) for q in states])
    logger.debug(
        "ran %s loops (path=%s, seed=%s), final error %.3e",
        config.loops,
        config.attention_path,
        task.seed,
        errors[-1],
    )
    return LoopTrajectory(
        q_states=states,
        tf_output=-states[-1],
        step_sizes=etas,
        per_step_errors=errors,
    )


__all__ = ["loop_step", "prediction_error", "run_loops"]
