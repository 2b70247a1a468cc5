"""
Linear attention with a causal mask, Attn(Z; Q, P) = (M o (Z Q Z^T)) Z P.

Two paths are provided. ``attn_general`` evaluates the matrix formula
literally (full Gram matrix, Hadamard mask, projection) and serves as the
oracle; ``attn_closed_form`` returns the only nonzero block of the default
construction, (X^T X) q + alpha X^T y, and is what the loop engine runs.
"""

import logging

import numpy as np

from .errors import DimensionError
from .types import AttentionParams, PromptState, RealMatrix, RealVector, as_matrix, as_vector

logger = logging.getLogger(__name__)


def default_params(n: int, d: int) -> AttentionParams:
    """
    The fixed construction: Q = I, P = blockdiag(I_d, 0), mask with ones only
    in the first n entries of the last row.
    """
    if n < 1 or d < 1:
        raise DimensionError(f"n and d must be positive, got n={n}, d={d}")
    query_key = np.eye(d + 1)
    value_output = np.zeros((d + 1, d + 1))
    value_output[:d, :d] = np.eye(d)
    mask = np.zeros((n + 1, n + 1))
    mask[n, :n] = 1.0
    return AttentionParams(query_key=query_key, value_output=value_output, mask=mask)


def attn_general(prompt: PromptState, params: AttentionParams) -> RealMatrix:
    """
    Evaluate (M o (Z Q Z^T)) Z P exactly as written.

    Args:
        prompt: Prompt state holding Z, (n+1) x (d+1)
        params: Q, P of size (d+1)^2 and M of size (n+1)^2

    Returns:
        (n+1) x (d+1) attention output

    Raises:
        DimensionError: Parameter sizes do not conform with Z
    """
    z = prompt.z
    rows, cols = z.shape
    if params.query_key.shape != (cols, cols) or params.value_output.shape != (cols, cols):
        raise DimensionError(
            f"Q and P must be {cols}x{cols} for Z of shape {z.shape}, "
            f"got {params.query_key.shape} and {params.value_output.shape}"
        )
    if params.mask.shape != (rows, rows):
        raise DimensionError(f"mask must be {rows}x{rows}, got {params.mask.shape}")
    scores = z @ params.query_key @ z.T
    out: RealMatrix = (params.mask * scores) @ z @ params.value_output
    return out


def attn_closed_form(
    x: RealMatrix,
    y: RealVector,
    q: RealVector,
    alpha: float,
    flip_label_sign: bool = False,
) -> RealVector:
    """
    Nonzero block of the single-layer output: (X^T X) q + alpha X^T y.

    Args:
        x: n x d data matrix
        y: Labels, length n
        q: Query vector, length d
        alpha: Query scalar
        flip_label_sign: Fault injection; returns (X^T X) q - alpha X^T y

    Returns:
        d-vector (transpose of the bottom-left row of the attention output)

    Examples:
        >>> attn_closed_form(np.array([[1.0], [2.0]]), np.array([1.0, 2.0]), np.zeros(1), 2.0)
        array([10.])
    """
    x = as_matrix(x, "X")
    y = as_vector(y, "y")
    q = as_vector(q, "q")
    n, d = x.shape
    if y.shape != (n,) or q.shape != (d,):
        raise DimensionError(
            f"expected y of length {n} and q of length {d}, got {y.shape[0]} and {q.shape[0]}"
        )
    label_term = alpha * (x.T @ y)
    if flip_label_sign:
        label_term = -label_term
    out: RealVector = x.T @ (x @ q) + label_term
    return out


def embed_query_row(block: RealVector, n: int, d: int) -> RealMatrix:
    """Place a d-vector in the bottom-left of an otherwise zero (n+1) x (d+1) matrix."""
    out = np.zeros((n + 1, d + 1))
    out[n, :d] = block
    return out


__all__ = ["default_params", "attn_general", "attn_closed_form", "embed_query_row"]
