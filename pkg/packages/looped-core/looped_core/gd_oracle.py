"""
Explicit gradient descent on l(theta) = 0.5 ||y - X theta||^2 and its bounds.

This engine shares no code path with the looped transformer: it keeps the
Gram matrix G = X^T X and b = X^T y and iterates theta <- theta - eta (G theta - b).
The smoothness and strong-convexity constants are L = ||X^T X|| and
mu = lambda_min(X^T X); with eta = 1/L the squared distance to theta*
contracts by (1 - 1/kappa) per step, which is majorized by exp(-1/kappa).
"""

import logging
import math
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .errors import DimensionError, ScheduleMismatchError
from .spectral import spectral_norm, summarize_gram
from .types import (
    AutoSchedule,
    BoundParams,
    ConstantSchedule,
    GdTrajectory,
    LoopConfig,
    MatrixField,
    RealVector,
    VectorField,
    as_vector,
)

logger = logging.getLogger(__name__)

# exp() underflows to zero below roughly -745; switch to logs before that.
LOG_DOMAIN_EXPONENT = 700.0
# Relative tolerance when deciding that a constant step equals 1/L.
STEP_MATCH_RTOL = 1e-12


class RegressionProblem(BaseModel):
    """Linear-regression data with its smoothness and strong-convexity constants."""

    x: MatrixField
    y: VectorField
    gram: MatrixField
    xty: VectorField
    smoothness: float = Field(..., gt=0.0, description="L = ||X^T X||")
    strong_convexity: float = Field(..., gt=0.0, description="mu = lambda_min(X^T X)")
    kappa: float = Field(..., ge=1.0, description="L / mu")

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @model_validator(mode="after")
    def _check_constants(self) -> "RegressionProblem":
        if self.smoothness < self.strong_convexity:
            raise ValueError("L must be >= mu")
        return self

    @classmethod
    def from_data(cls, x: np.ndarray, y: np.ndarray) -> "RegressionProblem":
        """
        Build the problem and its constants from X and y.

        Raises:
            DimensionError: y does not match the rows of X
            SingularMatrixError: X^T X not invertible in working precision
        """
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if x.ndim != 2 or y.shape != (x.shape[0],):
            raise DimensionError(f"y must have one entry per row of X, got {y.shape} for {x.shape}")
        gram = x.T @ x
        summary = summarize_gram(gram)
        smoothness = spectral_norm(gram)
        return cls(
            x=x,
            y=y,
            gram=gram,
            xty=x.T @ y,
            smoothness=smoothness,
            strong_convexity=summary.lambda_min,
            kappa=smoothness / summary.lambda_min,
        )

    @property
    def d(self) -> int:
        return int(self.x.shape[1])

    def _check_theta(self, theta: np.ndarray) -> RealVector:
        theta = as_vector(theta, "theta")
        if theta.shape != (self.d,):
            raise DimensionError(f"theta must have length {self.d}, got {theta.shape[0]}")
        return theta


def loss(problem: RegressionProblem, theta: RealVector) -> float:
    """l(theta) = 0.5 ||y - X theta||^2."""
    theta = problem._check_theta(theta)
    residual = problem.y - problem.x @ theta
    return 0.5 * float(residual @ residual)


def gradient(problem: RegressionProblem, theta: RealVector) -> RealVector:
    """grad l(theta) = X^T X theta - X^T y."""
    theta = problem._check_theta(theta)
    grad: RealVector = problem.gram @ theta - problem.xty
    return grad


def run_gd(
    problem: RegressionProblem,
    theta0: RealVector,
    config: LoopConfig,
    theta_star: Optional[RealVector] = None,
) -> GdTrajectory:
    """
    Iterate theta^(t) = theta^(t-1) - eta^(t-1) (X^T X theta^(t-1) - X^T y) T times.

    Args:
        problem: Regression data and constants
        theta0: Initial iterate
        config: Loop count and step schedule (auto resolves to 1/L)
        theta_star: When given, ||theta^(t) - theta*|| is recorded per step

    Returns:
        GdTrajectory with T+1 iterates and losses
    """
    theta = problem._check_theta(theta0).copy()
    etas = config.step_sizes(problem.smoothness)

    states = np.empty((config.loops + 1, problem.d))
    states[0] = theta
    for t, eta in enumerate(etas):
        theta = theta - eta * (problem.gram @ theta - problem.xty)
        states[t + 1] = theta

    losses = np.array([loss(problem, s) for s in states])
    param_errors = None
    if theta_star is not None:
        target = problem._check_theta(theta_star)
        param_errors = np.linalg.norm(states - target, axis=1)
    return GdTrajectory(
        theta_states=states,
        losses=losses,
        step_sizes=etas,
        param_errors=param_errors,
    )


def is_inverse_smoothness_schedule(config: LoopConfig, smoothness: float) -> bool:
    """True when the schedule is the constant eta = 1/L one."""
    schedule = config.step_schedule
    if isinstance(schedule, AutoSchedule):
        return True
    if isinstance(schedule, ConstantSchedule):
        target = 1.0 / smoothness
        return abs(schedule.eta - target) <= STEP_MATCH_RTOL * target
    return False


def bound_params_for(
    problem: RegressionProblem,
    config: LoopConfig,
    theta0: RealVector,
    theta_star: Optional[RealVector] = None,
    alpha: float = 1.0,
) -> BoundParams:
    """
    BoundParams for a run, with R = ||theta0 - theta*|| (R = 1 without theta*).

    Raises:
        ScheduleMismatchError: The schedule is not the constant eta = 1/L one
    """
    if not is_inverse_smoothness_schedule(config, problem.smoothness):
        raise ScheduleMismatchError(
            "convergence bounds only cover the constant step eta = 1/L "
            f"(got {config.step_schedule.kind} schedule)"
        )
    radius = 1.0
    if theta_star is not None:
        radius = float(np.linalg.norm(problem._check_theta(theta0) - as_vector(theta_star)))
    return BoundParams(kappa=problem.kappa, radius=radius, alpha=alpha)


def log_theoretical_param_bound(t: int, bounds: BoundParams) -> float:
    """log(exp(-t/kappa) R^2); -inf when R = 0."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    if bounds.radius == 0.0:
        return -math.inf
    return -t / bounds.kappa + 2.0 * math.log(bounds.radius)


def theoretical_param_bound(t: int, bounds: BoundParams) -> float:
    """
    Squared-distance bound ||theta^(t) - theta*||^2 <= exp(-t/kappa) R^2.

    Examples:
        >>> theoretical_param_bound(0, BoundParams(kappa=2.0, radius=3.0))
        9.0
    """
    log_value = log_theoretical_param_bound(t, bounds)
    if log_value < -LOG_DOMAIN_EXPONENT:
        # Representable down to ~1e-308; beyond that the log form is authoritative.
        return math.exp(log_value) if log_value > -745.0 else 0.0
    return math.exp(-t / bounds.kappa) * bounds.radius**2


def contraction_param_bound(t: int, bounds: BoundParams) -> float:
    """Tighter squared-distance bound (1 - 1/kappa)^t R^2 for eta = 1/L."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    return (1.0 - 1.0 / bounds.kappa) ** t * bounds.radius**2


def log_theoretical_prediction_bound(t: int, bounds: BoundParams) -> float:
    """log(|alpha| R exp(-t / (2 kappa))); -inf when alpha or R is zero."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    if bounds.alpha == 0.0 or bounds.radius == 0.0:
        return -math.inf
    return math.log(abs(bounds.alpha)) + math.log(bounds.radius) - t / (2.0 * bounds.kappa)


def theoretical_prediction_bound(t: int, bounds: BoundParams) -> float:
    """Prediction-error bound |alpha| R exp(-t / (2 kappa))."""
    log_value = log_theoretical_prediction_bound(t, bounds)
    if log_value < -LOG_DOMAIN_EXPONENT:
        return math.exp(log_value) if log_value > -745.0 else 0.0
    return abs(bounds.alpha) * bounds.radius * math.exp(-t / (2.0 * bounds.kappa))


__all__ = [
    "RegressionProblem",
    "loss",
    "gradient",
    "run_gd",
    "is_inverse_smoothness_schedule",
    "bound_params_for",
    "theoretical_param_bound",
    "log_theoretical_param_bound",
    "contraction_param_bound",
    "theoretical_prediction_bound",
    "log_theoretical_prediction_bound",
]
