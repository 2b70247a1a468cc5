"""
Seeded generation of synthetic in-context tasks and assembly of the prompt Z^(0).

Randomness comes from ``RandomSource``, a thin owner of a numpy
``Generator(PCG64(seed))``. PCG64 streams are specified bit-for-bit by numpy,
so the same seed yields the same tasks on every platform. Trials are seeded
independently (``base_seed + trial``), never by sharing one stream.
"""

import logging
from typing import Optional, Tuple

import numpy as np

from .errors import DimensionError, InvalidQueryError, UnderdeterminedError
from .types import PromptState, RealMatrix, RealVector, TaskInstance, as_matrix, as_vector

logger = logging.getLogger(__name__)

MAX_SEED = 2**64 - 1


class RandomSource:
    """
    Single-owner seeded random stream.

    Do not share one instance between concurrent trials; give each trial its
    own seed instead (see ``for_trial``).
    """

    def __init__(self, seed: int):
        if not 0 <= seed <= MAX_SEED:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
        self.seed = seed
        self._generator = np.random.Generator(np.random.PCG64(seed))

    @classmethod
    def for_trial(cls, base_seed: int, trial: int) -> "RandomSource":
        """Stream for trial ``trial`` of a batch: seed = base_seed + trial."""
        return cls(base_seed + trial)

    def uniform(self, size: int) -> RealVector:
        """Draw ``size`` uniforms on [0, 1)."""
        return self._generator.random(size)

    def standard_normal(self, shape: Tuple[int, ...]) -> np.ndarray:
        """
        Draw i.i.d. N(0, 1) values of the given shape.

        Uses numpy's ziggurat sampler on the PCG64 stream, not Box-Muller, so
        draws match other numpy code seeded the same way but not a Box-Muller
        implementation fed the same uniforms.
        """
        return self._generator.standard_normal(shape)

    def __repr__(self) -> str:
        return f"RandomSource(seed={self.seed})"


def sample_gaussian_matrix(n: int, d: int, rng: RandomSource) -> RealMatrix:
    """
    n x d matrix of i.i.d. standard normal entries.

    Raises:
        DimensionError: n < 1 or d < 1
    """
    if n < 1 or d < 1:
        raise DimensionError(f"matrix dimensions must be positive, got n={n}, d={d}")
    return rng.standard_normal((n, d))


def sample_unit_sphere(d: int, rng: RandomSource) -> RealVector:
    """
    Uniform draw from the unit sphere in R^d (normalized Gaussian).

    A zero-norm draw is resampled rather than reported.
    """
    if d < 1:
        raise DimensionError(f"dimension must be positive, got d={d}")
    while True:
        v = rng.standard_normal((d,))
        norm = float(np.linalg.norm(v))
        if norm > 0.0 and np.isfinite(norm):
            unit: RealVector = v / norm
            return unit
        logger.debug("zero-norm sphere draw, resampling")


def build_task(
    x: RealMatrix,
    theta_star: RealVector,
    alpha: float,
    q0: Optional[RealVector] = None,
    seed: int = 0,
) -> TaskInstance:
    """
    Assemble a TaskInstance from explicit data; labels are y = X @ theta_star.

    Args:
        x: n x d data matrix
        theta_star: Unit-norm hidden target
        alpha: Nonzero query scalar
        q0: Initial query vector (zero vector when omitted)
        seed: Seed recorded with the task

    Raises:
        InvalidQueryError: alpha == 0
        UnderdeterminedError: n <= d
    """
    x = as_matrix(x, "X")
    theta_star = as_vector(theta_star, "theta_star")
    n, d = x.shape
    if alpha == 0.0:
        raise InvalidQueryError("query alpha must be nonzero")
    if n <= d:
        raise UnderdeterminedError(f"need more examples than features, got n={n}, d={d}")
    if theta_star.shape != (d,):
        raise DimensionError(f"theta_star must have length {d}, got {theta_star.shape[0]}")
    q0 = np.zeros(d) if q0 is None else as_vector(q0, "q0")
    y = x @ theta_star
    return TaskInstance(x=x, y=y, theta_star=theta_star, alpha=alpha, q0=q0, seed=seed)


def make_task(
    n: int,
    d: int,
    alpha: float,
    rng: RandomSource,
    q0: Optional[RealVector] = None,
) -> TaskInstance:
    """
    Draw a realizable task: Gaussian X, theta* uniform on the sphere, y = X theta*.

    The query starts at q0 = 0_d unless another initial vector is given.

    Raises:
        InvalidQueryError: alpha == 0
        UnderdeterminedError: n <= d
    """
    if alpha == 0.0:
        raise InvalidQueryError("query alpha must be nonzero")
    if n <= d:
        raise UnderdeterminedError(f"need more examples than features, got n={n}, d={d}")
    x = sample_gaussian_matrix(n, d, rng)
    theta_star = sample_unit_sphere(d, rng)
    task = build_task(x, theta_star, alpha, q0=q0, seed=rng.seed)
    logger.debug("made task n=%s d=%s alpha=%s seed=%s", n, d, alpha, rng.seed)
    return task


def assemble_prompt(task: TaskInstance) -> PromptState:
    """Lay out Z^(0) = [[X, y], [q0^T, alpha]] as an (n+1) x (d+1) matrix."""
    n, d = task.n, task.d
    z = np.empty((n + 1, d + 1), dtype=np.float64)
    z[:n, :d] = task.x
    z[:n, d] = task.y
    z[n, :d] = task.q0
    z[n, d] = task.alpha
    return PromptState(z=z, n=n, d=d)


__all__ = [
    "MAX_SEED",
    "RandomSource",
    "sample_gaussian_matrix",
    "sample_unit_sphere",
    "build_task",
    "make_task",
    "assemble_prompt",
]
