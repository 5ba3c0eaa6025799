"""Input validation helpers and shared error types.

Every public entry point funnels its array inputs through these helpers so
the numerical kernels can assume clean data: dense float64, no zero rows,
full column rank, strictly positive weights.
"""

from __future__ import annotations

import numpy as np


class MatrixValidationError(ValueError):
    """Raised when an input matrix violates a construction invariant."""


class ConditioningError(ArithmeticError):
    """Raised when a factorization is singular to working precision.

    Attributes
    ----------
    smallest_pivot : float
        The offending pivot (or smallest eigenvalue) that triggered the error.
    """

    def __init__(self, message: str, smallest_pivot: float = float("nan")):
        super().__init__(message)
        self.smallest_pivot = smallest_pivot


class ConvergenceError(RuntimeError):
    """Raised when an iterative routine exhausts its budget.

    Attributes
    ----------
    best_residual : float
        Best residual achieved before giving up.
    """

    def __init__(self, message: str, best_residual: float = float("nan")):
        super().__init__(message)
        self.best_residual = best_residual


class ParseError(ValueError):
    """Raised on malformed input files; carries the 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


def _format_indices(idx: np.ndarray, limit: int = 10) -> str:
    shown = ", ".join(str(i) for i in idx[:limit])
    if idx.size > limit:
        shown += f", ... ({idx.size} total)"
    return shown


def validate_matrix(A, *, name: str = "A", check_rank: bool = True) -> np.ndarray:
    """Validate and normalize a tall input matrix.

    Checks: two-dimensional, finite entries, n >= d >= 1, no all-zero rows,
    and (optionally) full column rank. Returns a float64 C-contiguous array.

    Parameters
    ----------
    A : array_like
        The n x d input matrix, rows are the weighted points.
    name : str
        Name used in error messages.
    check_rank : bool
        When True, verify full column rank via SVD. Cheap relative to any
        solve at construction time, but skippable on hot paths that
        factorize anyway.

    Raises
    ------
    MatrixValidationError
        On any violated invariant; the message names offending rows.
    """
    M = np.ascontiguousarray(np.asarray(A, dtype=np.float64))
    if M.ndim != 2:
        raise MatrixValidationError(f"{name} must be 2-dimensional, got ndim={M.ndim}")
    n, d = M.shape
    if d < 1 or n < 1:
        raise MatrixValidationError(f"{name} must be non-empty, got shape {M.shape}")
    if n < d:
        raise MatrixValidationError(
            f"{name} must be tall (n >= d), got n={n} < d={d}"
        )
    finite = np.isfinite(M)
    if not finite.all():
        bad = np.nonzero(~finite.all(axis=1))[0]
        raise MatrixValidationError(
            f"{name} contains non-finite entries in rows [{_format_indices(bad)}]"
        )
    row_norms = np.abs(M).max(axis=1)
    zero_rows = np.nonzero(row_norms == 0.0)[0]
    if zero_rows.size:
        raise MatrixValidationError(
            f"{name} has all-zero rows [{_format_indices(zero_rows)}]; "
            "zero rows admit no positive weight"
        )
    if check_rank:
        svals = np.linalg.svd(M, compute_uv=False)
        tol = max(n, d) * np.finfo(np.float64).eps * svals[0]
        rank = int(np.count_nonzero(svals > tol))
        if rank < d:
            raise MatrixValidationError(
                f"{name} is rank deficient: numerical rank {rank} < d={d} "
                f"(smallest singular value {svals[-1]:.3e})"
            )
    return M


def validate_weights(w, *, n: int | None = None, name: str = "w") -> np.ndarray:
    """Validate a strictly positive finite weight vector, return float64 copy."""
    v = np.ascontiguousarray(np.asarray(w, dtype=np.float64))
    if v.ndim != 1:
        raise MatrixValidationError(f"{name} must be 1-dimensional, got ndim={v.ndim}")
    if n is not None and v.shape[0] != n:
        raise MatrixValidationError(
            f"{name} has length {v.shape[0]}, expected {n}"
        )
    if not np.isfinite(v).all():
        raise MatrixValidationError(f"{name} contains non-finite entries")
    if (v <= 0.0).any():
        bad = np.nonzero(v <= 0.0)[0]
        raise MatrixValidationError(
            f"{name} must be strictly positive; offending entries "
            f"[{_format_indices(bad)}]"
        )
    return v


def validate_p(p) -> float:
    """Validate the norm exponent; only p >= 2 is supported."""
    p = float(p)
    if not np.isfinite(p) or p < 2.0:
        raise MatrixValidationError(f"p must satisfy p >= 2, got p={p}")
    return p


def validate_accuracy(alpha, *, name: str = "alpha") -> float:
    """Validate an accuracy parameter lying strictly inside (0, 1)."""
    alpha = float(alpha)
    if not (0.0 < alpha < 1.0):
        raise MatrixValidationError(f"{name} must lie in (0, 1), got {alpha}")
    return alpha
