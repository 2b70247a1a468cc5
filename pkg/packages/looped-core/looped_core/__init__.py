"""
looped-core: linear looped transformers simulated next to explicit gradient descent.
"""

from .errors import (
    BoundViolationError,
    ConvergenceError,
    DimensionError,
    HypothesisViolationError,
    InvalidQueryError,
    LoopedError,
    NonFiniteError,
    ScheduleMismatchError,
    SingularMatrixError,
    SymmetryError,
    UnderdeterminedError,
)
from .types import (
    AttentionParams,
    AutoSchedule,
    BoundParams,
    BoundReport,
    ConstantSchedule,
    EquivalenceReport,
    ExplicitSchedule,
    GdTrajectory,
    LoopConfig,
    LoopTrajectory,
    PromptState,
    SpectralSummary,
    StepSchedule,
    TaskInstance,
)
from .spectral import condition_number, least_squares, spectral_norm, summarize_gram, sym_eig_extremes
from .task import RandomSource, assemble_prompt, build_task, make_task
from .attention import attn_closed_form, attn_general, default_params
from .looped_tf import loop_step, prediction_error, run_loops
from .gd_oracle import (
    RegressionProblem,
    bound_params_for,
    contraction_param_bound,
    gradient,
    loss,
    run_gd,
    theoretical_param_bound,
    theoretical_prediction_bound,
)
from .verify import check_attention_oracle, check_bound, check_equivalence, check_frozen_context

__version__ = "0.1.0"

__all__ = [
    "LoopedError",
    "DimensionError",
    "NonFiniteError",
    "SymmetryError",
    "ConvergenceError",
    "SingularMatrixError",
    "InvalidQueryError",
    "UnderdeterminedError",
    "ScheduleMismatchError",
    "HypothesisViolationError",
    "BoundViolationError",
    "SpectralSummary",
    "TaskInstance",
    "PromptState",
    "AttentionParams",
    "AutoSchedule",
    "ConstantSchedule",
    "ExplicitSchedule",
    "StepSchedule",
    "LoopConfig",
    "LoopTrajectory",
    "GdTrajectory",
    "BoundParams",
    "EquivalenceReport",
    "BoundReport",
    "sym_eig_extremes",
    "spectral_norm",
    "summarize_gram",
    "condition_number",
    "least_squares",
    "RandomSource",
    "make_task",
    "build_task",
    "assemble_prompt",
    "default_params",
    "attn_general",
    "attn_closed_form",
    "loop_step",
    "run_loops",
    "prediction_error",
    "RegressionProblem",
    "loss",
    "gradient",
    "run_gd",
    "bound_params_for",
    "theoretical_param_bound",
    "contraction_param_bound",
    "theoretical_prediction_bound",
    "check_equivalence",
    "check_bound",
    "check_attention_oracle",
    "check_frozen_context",
]
