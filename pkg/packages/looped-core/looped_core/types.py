"""
Core types for looped-core.

This module defines the array aliases and validators shared by every engine,
together with the pydantic models that carry tasks, prompts, attention
parameters, loop configurations, trajectories and verification reports.

Models that hold numpy arrays use ``arbitrary_types_allowed``; their arrays are
copied to float64 and made read-only on construction.
"""

from typing import Annotated, Any, List, Literal, Optional, Union

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, field_validator, model_validator

from .errors import DimensionError, NonFiniteError, SingularMatrixError

FloatArray = NDArray[np.float64]
RealMatrix = FloatArray
RealVector = FloatArray

# Tolerance on the unit norm of the hidden target.
UNIT_NORM_ATOL = 1e-12
# Slack allowed when an empirical error is compared against a bound.
BOUND_SLACK = 1e-9


def as_matrix(value: Any, name: str = "matrix") -> RealMatrix:
    """
    Coerce a value to a finite, non-empty 2-D float64 array.

    Args:
        value: Array-like input
        name: Name used in error messages

    Returns:
        float64 ndarray (may share memory with the input)

    Raises:
        DimensionError: Not 2-D, or a zero dimension
        NonFiniteError: Contains NaN or Inf
    """
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise DimensionError(f"{name} must be a non-empty 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} contains NaN or Inf entries")
    return arr


def as_vector(value: Any, name: str = "vector") -> RealVector:
    """Coerce a value to a finite, non-empty 1-D float64 array."""
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim != 1 or arr.shape[0] == 0:
        raise DimensionError(f"{name} must be a non-empty 1-D vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} contains NaN or Inf entries")
    return arr


def _frozen(arr: FloatArray) -> FloatArray:
    out = np.array(arr, dtype=np.float64, copy=True)
    out.flags.writeable = False
    return out


def _frozen_matrix(value: Any) -> FloatArray:
    return _frozen(as_matrix(value))


def _frozen_vector(value: Any) -> FloatArray:
    return _frozen(as_vector(value))


def _frozen_array(value: Any) -> FloatArray:
    arr = np.asarray(value, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError("array contains NaN or Inf entries")
    return _frozen(arr)


MatrixField = Annotated[np.ndarray, BeforeValidator(_frozen_matrix)]
VectorField = Annotated[np.ndarray, BeforeValidator(_frozen_vector)]
ArrayField = Annotated[np.ndarray, BeforeValidator(_frozen_array)]

_ARRAY_MODEL_CONFIG = ConfigDict(arbitrary_types_allowed=True, frozen=True)


class SpectralSummary(BaseModel):
    """Extreme eigenvalues of a Gram matrix X^T X and their ratio kappa."""

    lambda_min: float = Field(..., ge=0.0)
    lambda_max: float = Field(..., ge=0.0)
    condition_number: float = Field(..., ge=1.0)

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def _check_order(self) -> "SpectralSummary":
        if self.lambda_max < self.lambda_min:
            raise ValueError("lambda_max must be >= lambda_min")
        return self


class TaskInstance(BaseModel):
    """
    One synthetic in-context problem.

    ``x`` is the n x d data matrix X, ``y = X theta_star`` the labels, ``alpha``
    the (nonzero) query scalar and ``q0`` the initial query vector.
    """

    x: MatrixField
    y: VectorField
    theta_star: VectorField
    alpha: float
    q0: VectorField
    seed: int = Field(0, ge=0, lt=2**64)

    model_config = _ARRAY_MODEL_CONFIG

    @property
    def n(self) -> int:
        return int(self.x.shape[0])

    @property
    def d(self) -> int:
        return int(self.x.shape[1])

    @model_validator(mode="after")
    def _check_invariants(self) -> "TaskInstance":
        n, d = self.x.shape
        if n <= d:
            raise ValueError(f"task needs n > d, got n={n}, d={d}")
        if self.y.shape != (n,):
            raise ValueError(f"y must have length {n}, got {self.y.shape[0]}")
        if self.theta_star.shape != (d,) or self.q0.shape != (d,):
            raise ValueError(f"theta_star and q0 must have length {d}")
        if not np.isfinite(self.alpha) or self.alpha == 0.0:
            raise ValueError("alpha must be a finite nonzero real")
        norm = float(np.linalg.norm(self.theta_star))
        if abs(norm - 1.0) > UNIT_NORM_ATOL:
            raise ValueError(f"theta_star must have unit norm, got {norm!r}")
        # Realizable labels; exact when built by make_task, near-exact after a file round trip.
        residual = float(np.max(np.abs(self.y - self.x @ self.theta_star)))
        if residual > 1e-12 * max(1.0, float(np.max(np.abs(self.y)))):
            raise ValueError(f"y must equal X @ theta_star (residual {residual:.3e})")
        return self


class PromptState(BaseModel):
    """
    The (n+1) x (d+1) prompt matrix Z laid out as [[X, y], [q^T, alpha]].

    Only the bottom-left d entries (the query row) change across loops.
    """

    z: MatrixField
    n: int = Field(..., ge=1)
    d: int = Field(..., ge=1)

    model_config = _ARRAY_MODEL_CONFIG

    @model_validator(mode="after")
    def _check_shape(self) -> "PromptState":
        if self.z.shape != (self.n + 1, self.d + 1):
            raise ValueError(
                f"Z must be {(self.n + 1, self.d + 1)} for n={self.n}, d={self.d}, got {self.z.shape}"
            )
        return self

    @property
    def x(self) -> RealMatrix:
        return self.z[: self.n, : self.d]

    @property
    def y(self) -> RealVector:
        return self.z[: self.n, self.d]

    @property
    def q(self) -> RealVector:
        return self.z[self.n, : self.d]

    @property
    def alpha(self) -> float:
        return float(self.z[self.n, self.d])

    def with_query(self, q: RealVector) -> "PromptState":
        """Return a copy of this prompt with the query row replaced by ``q``."""
        q = as_vector(q, "q")
        if q.shape != (self.d,):
            raise DimensionError(f"q must have length {self.d}, got {q.shape[0]}")
        z = np.array(self.z, copy=True)
        z[self.n, : self.d] = q
        return PromptState(z=z, n=self.n, d=self.d)


class AttentionParams(BaseModel):
    """
    Fixed attention weights: query-key Q, value-output P and causal mask M.

    Q and P are (d+1) x (d+1); M is (n+1) x (n+1) with 0/1 entries.
    """

    query_key: MatrixField
    value_output: MatrixField
    mask: MatrixField

    model_config = _ARRAY_MODEL_CONFIG

    @model_validator(mode="after")
    def _check_params(self) -> "AttentionParams":
        k = self.query_key.shape[0]
        if self.query_key.shape != (k, k) or self.value_output.shape != (k, k):
            raise ValueError("Q and P must be square and of equal size")
        if self.mask.shape[0] != self.mask.shape[1]:
            raise ValueError("mask must be square")
        if not np.all((self.mask == 0.0) | (self.mask == 1.0)):
            raise ValueError("mask entries must be 0 or 1")
        return self


class AutoSchedule(BaseModel):
    """Constant step eta = 1/L, with L = ||X^T X|| resolved per task."""

    kind: Literal["auto"] = "auto"

    model_config = ConfigDict(extra="forbid", frozen=True)


class ConstantSchedule(BaseModel):
    """Constant step eta for every loop."""

    kind: Literal["constant"] = "constant"
    eta: float = Field(..., gt=0.0, allow_inf_nan=False)

    model_config = ConfigDict(extra="forbid", frozen=True)


class ExplicitSchedule(BaseModel):
    """One step size per loop, eta^(0) .. eta^(T-1)."""

    kind: Literal["explicit"] = "explicit"
    etas: List[float]

    model_config = ConfigDict(extra="forbid", frozen=True)

    @field_validator("etas")
    @classmethod
    def _positive(cls, v: List[float]) -> List[float]:
        if any(not np.isfinite(e) or e <= 0.0 for e in v):
            raise ValueError("every step size must be finite and strictly positive")
        return v


StepSchedule = Annotated[
    Union[AutoSchedule, ConstantSchedule, ExplicitSchedule], Field(discriminator="kind")
]


class LoopConfig(BaseModel):
    """Loop count T, step schedule and engine switches for a looped run."""

    loops: int = Field(..., ge=0, description="Loop number T")
    step_schedule: StepSchedule = Field(default_factory=AutoSchedule)
    attention_path: Literal["closed_form", "general"] = "closed_form"
    inject_fault: bool = Field(
        False, description="Flip the sign of the label term in the closed form (mutation canary)"
    )

    model_config = ConfigDict(extra="forbid", frozen=True)

    @model_validator(mode="after")
    def _check_schedule_length(self) -> "LoopConfig":
        schedule = self.step_schedule
        if isinstance(schedule, ExplicitSchedule) and len(schedule.etas) != self.loops:
            raise ValueError(
                f"explicit schedule has {len(schedule.etas)} steps for {self.loops} loops"
            )
        return self

    def step_sizes(self, smoothness: float) -> FloatArray:
        """
        Resolve the schedule into T step sizes.

        Args:
            smoothness: L = ||X^T X||, used by the auto schedule

        Returns:
            float64 array of length T

        Raises:
            SingularMatrixError: auto schedule with L <= 0
        """
        schedule = self.step_schedule
        if isinstance(schedule, AutoSchedule):
            if smoothness <= 0.0:
                raise SingularMatrixError(
                    f"eta = 1/L needs L = ||X^T X|| > 0, got {smoothness!r}", ratio=0.0
                )
            return np.full(self.loops, 1.0 / smoothness)
        if isinstance(schedule, ConstantSchedule):
            return np.full(self.loops, schedule.eta)
        return np.asarray(schedule.etas, dtype=np.float64)


class LoopTrajectory(BaseModel):
    """Hidden query states q^(0..T) of a looped run and its output -q^(T)."""

    q_states: ArrayField
    tf_output: VectorField
    step_sizes: ArrayField
    per_step_errors: Optional[ArrayField] = None

    model_config = _ARRAY_MODEL_CONFIG

    @property
    def loops(self) -> int:
        return int(self.q_states.shape[0]) - 1

    @model_validator(mode="after")
    def _check_lengths(self) -> "LoopTrajectory":
        if self.q_states.ndim != 2 or self.q_states.shape[0] != self.step_sizes.shape[0] + 1:
            raise ValueError("q_states must hold T+1 states for T step sizes")
        errors = self.per_step_errors
        if errors is not None and errors.shape != (self.q_states.shape[0],):
            raise ValueError("per_step_errors must hold T+1 values")
        return self


class GdTrajectory(BaseModel):
    """Gradient-descent iterates theta^(0..T) with losses and optional distances to theta*."""

    theta_states: ArrayField
    losses: ArrayField
    step_sizes: ArrayField
    param_errors: Optional[ArrayField] = None

    model_config = _ARRAY_MODEL_CONFIG

    @property
    def loops(self) -> int:
        return int(self.theta_states.shape[0]) - 1

    @model_validator(mode="after")
    def _check_lengths(self) -> "GdTrajectory":
        count = self.theta_states.shape[0]
        if self.losses.shape != (count,) or self.step_sizes.shape != (count - 1,):
            raise ValueError("losses and step sizes must match the number of iterates")
        if self.param_errors is not None:
            if self.param_errors.shape != (count,) or np.any(self.param_errors < 0.0):
                raise ValueError("param_errors must hold T+1 nonnegative values")
        return self


class BoundParams(BaseModel):
    """Inputs of the theoretical bounds: kappa, R >= ||theta^(0) - theta*||, alpha."""

    kappa: float = Field(..., ge=1.0, allow_inf_nan=False)
    radius: float = Field(1.0, ge=0.0, allow_inf_nan=False, description="R")
    alpha: float = Field(1.0, allow_inf_nan=False)

    model_config = ConfigDict(extra="forbid", frozen=True)


class EquivalenceReport(BaseModel):
    """Gap between the looped-transformer states and -alpha times the GD iterates."""

    kind: Literal["equivalence"] = "equivalence"
    instance_seed: int
    max_state_gap: float = Field(..., ge=0.0)
    output_gap: float = Field(..., ge=0.0)
    passed: bool
    tolerance: float = Field(..., gt=0.0)

    model_config = ConfigDict(extra="forbid", frozen=True)

    @model_validator(mode="after")
    def _check_passed(self) -> "EquivalenceReport":
        expected = self.max_state_gap <= self.tolerance and self.output_gap <= self.tolerance
        if self.passed != expected:
            raise ValueError("passed must equal (max_state_gap <= tol and output_gap <= tol)")
        return self

    def summary_line(self) -> str:
        """One log-friendly line: seed, pass/fail and gaps."""
        return (
            f"seed={self.instance_seed} kind={self.kind} passed={self.passed} "
            f"max_state_gap={self.max_state_gap!r} output_gap={self.output_gap!r} "
            f"tolerance={self.tolerance!r}"
        )


class BoundReport(BaseModel):
    """Per-step margins (bound - empirical) of the prediction-error bound."""

    kind: Literal["bound"] = "bound"
    instance_seed: int
    kappa: float = Field(..., ge=1.0)
    per_step_margin: List[float]
    min_margin: float
    passed: bool

    model_config = ConfigDict(extra="forbid", frozen=True)

    @model_validator(mode="after")
    def _check_passed(self) -> "BoundReport":
        if self.passed != (self.min_margin >= -BOUND_SLACK):
            raise ValueError("passed must equal (min_margin >= -1e-9)")
        return self

    def summary_line(self) -> str:
        """One log-friendly line: seed, pass/fail and the smallest margin."""
        return (
            f"seed={self.instance_seed} kind={self.kind} passed={self.passed} "
            f"min_margin={self.min_margin!r} kappa={self.kappa!r}"
        )


__all__ = [
    "FloatArray",
    "RealMatrix",
    "RealVector",
    "UNIT_NORM_ATOL",
    "BOUND_SLACK",
    "as_matrix",
    "as_vector",
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
]
