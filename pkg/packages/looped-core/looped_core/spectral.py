"""
Dense spectral primitives for small symmetric positive-semidefinite problems.

Eigenvalues come from LAPACK's symmetric driver ``?syev`` (Householder
tridiagonalization followed by implicit-shift QL/QR) through
``scipy.linalg.eigh``; the Gram matrices handled here are at most a few dozen
rows wide, so the full spectrum is always computed.
"""

import logging
from typing import Tuple

import numpy as np
import scipy.linalg

from .errors import ConvergenceError, DimensionError, SingularMatrixError, SymmetryError
from .types import FloatArray, RealMatrix, RealVector, SpectralSummary, as_matrix, as_vector

logger = logging.getLogger(__name__)

SYMMETRY_ATOL = 1e-10
SINGULAR_RTOL = 1e-12
# Eigen-pair residual accepted relative to ||A||.
RESIDUAL_RTOL = 1e-10


def _symmetrized(a: RealMatrix) -> RealMatrix:
    """Check squareness and symmetry of ``a`` and return (A + A^T) / 2."""
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    asym = float(np.max(np.abs(a - a.T)))
    if asym > SYMMETRY_ATOL:
        raise SymmetryError(f"matrix is not symmetric (max |A - A^T| = {asym:.3e})", asym)
    return (a + a.T) / 2.0


def _sym_eigh(a: RealMatrix) -> Tuple[FloatArray, FloatArray]:
    """
    Full eigendecomposition of a symmetric matrix, ascending eigenvalues.

    Raises:
        ConvergenceError: LAPACK failed, or an extreme eigen-pair residual is too large
    """
    sym = _symmetrized(a)
    try:
        w, v = scipy.linalg.eigh(sym, driver="ev", check_finite=False)
    except np.linalg.LinAlgError as e:
        raise ConvergenceError(f"symmetric eigen iteration failed: {e}", float("inf")) from e

    scale = max(1.0, float(np.max(np.abs(w))))
    for idx in (0, -1):
        residual = float(np.linalg.norm(sym @ v[:, idx] - w[idx] * v[:, idx]))
        if residual > RESIDUAL_RTOL * scale:
            raise ConvergenceError("eigen-pair did not converge", residual)
    return w, v


def sym_eig_extremes(a: RealMatrix) -> Tuple[float, float]:
    """
    Smallest and largest eigenvalues of a symmetric matrix.

    Args:
        a: Square matrix, symmetric within 1e-10 absolute

    Returns:
        (lambda_min, lambda_max)

    Raises:
        DimensionError: Non-square input
        SymmetryError: Asymmetric input
        ConvergenceError: Eigen iteration did not converge

    Examples:
        >>> sym_eig_extremes(np.diag([1.0, 4.0]))
        (1.0, 4.0)
    """
    w, _ = _sym_eigh(as_matrix(a, "A"))
    return float(w[0]), float(w[-1])


def spectral_norm(a: RealMatrix) -> float:
    """
    Spectral norm ||A|| = sqrt(lambda_max(A^T A)).

    Symmetric inputs take the direct route max(|lambda_min|, |lambda_max|),
    which equals lambda_max(A) for PSD matrices.
    """
    a = as_matrix(a, "A")
    if a.shape[0] == a.shape[1] and float(np.max(np.abs(a - a.T))) <= SYMMETRY_ATOL:
        lo, hi = sym_eig_extremes(a)
        return max(abs(lo), abs(hi))
    _, hi = sym_eig_extremes(a.T @ a)
    return float(np.sqrt(max(hi, 0.0)))


def summarize_gram(gram: RealMatrix) -> SpectralSummary:
    """
    Spectral summary of an already-formed Gram matrix G = X^T X.

    Raises:
        SingularMatrixError: lambda_min(G) < 1e-12 * lambda_max(G)
    """
    lo, hi = sym_eig_extremes(gram)
    if hi <= 0.0 or lo < SINGULAR_RTOL * hi:
        ratio = lo / hi if hi > 0.0 else 0.0
        raise SingularMatrixError(
            f"X^T X is singular in working precision (lambda_min/lambda_max = {ratio:.3e})", ratio
        )
    return SpectralSummary(lambda_min=lo, lambda_max=hi, condition_number=hi / lo)


def condition_number(x: RealMatrix) -> SpectralSummary:
    """
    Condition number kappa = lambda_max(X^T X) / lambda_min(X^T X) of a data matrix.

    Args:
        x: n x d data matrix

    Returns:
        SpectralSummary of X^T X

    Raises:
        SingularMatrixError: X^T X not invertible in working precision
    """
    x = as_matrix(x, "X")
    summary = summarize_gram(x.T @ x)
    logger.debug(
        "condition number n=%s d=%s kappa=%.6g", x.shape[0], x.shape[1], summary.condition_number
    )
    return summary


def least_squares(x: RealMatrix, y: RealVector) -> RealVector:
    """
    Least-squares optimizer theta~ = (X^T X)^{-1} X^T y.

    The normal equations are solved through the eigendecomposition of X^T X,
    V diag(1/lambda) V^T X^T y.

    Raises:
        DimensionError: y does not match the rows of X
        SingularMatrixError: X^T X not invertible in working precision
    """
    x = as_matrix(x, "X")
    y = as_vector(y, "y")
    if y.shape[0] != x.shape[0]:
        raise DimensionError(f"y has length {y.shape[0]} but X has {x.shape[0]} rows")
    gram = x.T @ x
    w, v = _sym_eigh(gram)
    if w[-1] <= 0.0 or w[0] < SINGULAR_RTOL * w[-1]:
        ratio = float(w[0] / w[-1]) if w[-1] > 0.0 else 0.0
        raise SingularMatrixError("X^T X is singular in working precision", ratio)
    rhs = x.T @ y
    theta: RealVector = v @ ((v.T @ rhs) / w)
    return theta


__all__ = [
    "SYMMETRY_ATOL",
    "SINGULAR_RTOL",
    "sym_eig_extremes",
    "spectral_norm",
    "summarize_gram",
    "condition_number",
    "least_squares",
]
