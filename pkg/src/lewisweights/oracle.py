"""Desk-scale reference Lewis weights, independent of the main driver.

Three routes to the fixed point w = sigma(W^{1/2-1/p} A), selected by p:

* ``contractive`` (2 <= p < 4): iterate the plain reweighting map
  w <- w^{1-p/2} sigma^{p/2}, which contracts at rate |p/2 - 1| < 1.
* ``damped`` (any p > 2): geometric-mean damping w <- w^{1-t} T(w)^t with
  t = 2/p. Substituting the definition of the reweighting map T shows this
  is algebraically the plain substitution w <- sigma(W^{1/2-1/p} A), whose
  linearization contracts at rate 1 - 2/p for every finite p.
* ``simplex_logdet`` (p > 2): maximize the concave objective
  logdet(A^T W^{1-2/p} A) over the scaled simplex {w >= 0, sum(w) = d} by
  entropic mirror ascent with backtracking. The gradient is proportional to
  sigma_i / w_i, so stationarity over the simplex forces sigma = w, the
  same fixed point reached by an unrelated optimization principle. That
  derivation is verified numerically in the test suite (finite differences)
  rather than taken on faith.

Convergence is never assumed: every route certifies itself through the
multiplicative fixed-point residual before returning.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import _reweighting_step, _scaling_exponent
from .linalg import SCORE_FLOOR, gram, leverage_scores
from .validation import (
    ConvergenceError,
    validate_matrix,
    validate_p,
    validate_weights,
)

MAX_FIXED_POINT_ITERATIONS = 10**6
MAX_ASCENT_ITERATIONS = 10**5


@dataclass(frozen=True)
class ReferenceWeights:
    """Converged reference weights with their convergence evidence."""

    weights: np.ndarray
    residual: float
    iterations: int
    method: str


def fixed_point_residual(A: np.ndarray, w: np.ndarray, p: float) -> float:
    """Max multiplicative defect of the defining equation.

    Returns max_i |sigma_i(W^{1/2-1/p} A) / w_i - 1| with exact scores;
    zero exactly at the Lewis weights.
    """
    A = validate_matrix(A, check_rank=False)
    w = validate_weights(w, n=A.shape[0])
    p = validate_p(p)
    sigma = leverage_scores(A, w ** _scaling_exponent(p))
    return float(np.abs(sigma / w - 1.0).max())


def _logdet_objective(A: np.ndarray, w: np.ndarray, p: float) -> float:
    """logdet(A^T W^{1-2/p} A), the concave potential of the simplex route."""
    sign, value = np.linalg.slogdet(gram(A, w ** _scaling_exponent(p)))
    if sign <= 0:
        raise ArithmeticError("log-det objective lost positive definiteness")
    return float(value)


def _logdet_gradient(A: np.ndarray, w: np.ndarray, p: float) -> np.ndarray:
    """Gradient of the log-det objective: (1 - 2/p) * sigma_i / w_i."""
    sigma = leverage_scores(A, w ** _scaling_exponent(p))
    return _scaling_exponent(p) * sigma / w


def _iterate_to_fixed_point(
    A: np.ndarray,
    w: np.ndarray,
    p: float,
    tol: float,
    *,
    damped: bool,
    max_iter: int,
) -> tuple[np.ndarray, float, int]:
    exponent = _scaling_exponent(p)
    best = np.inf
    for k in range(max_iter):
        sigma = leverage_scores(A, w**exponent)
        residual = float(np.abs(sigma / w - 1.0).max())
        best = min(best, residual)
        if residual <= tol:
            return w, residual, k
        if damped:
            # Geometric-mean damping with t = 2/p reduces to substituting
            # the scores directly; see module docstring.
            w = np.maximum(sigma, SCORE_FLOOR)
        else:
            w = np.maximum(_reweighting_step(w, sigma, p), SCORE_FLOOR)
    raise ConvergenceError(
        f"fixed-point iteration did not reach tol={tol:.1e} within "
        f"{max_iter} iterations (best residual {best:.3e})",
        best_residual=best,
    )


def _ascend_simplex(
    A: np.ndarray,
    w: np.ndarray,
    p: float,
    tol: float,
    *,
    max_iter: int,
) -> tuple[np.ndarray, float, int]:
    """Entropic mirror ascent of the log-det objective on the scaled simplex.

    Multiplicative updates renormalized to sum d stay strictly inside the
    simplex, so no projection is ever needed. The nominal step p/(p-2)
    cancels the local curvature; backtracking on the objective keeps every
    accepted step an ascent step.
    """
    n, d = A.shape
    exponent = _scaling_exponent(p)
    step = p / (p - 2.0)
    value = _logdet_objective(A, w, p)
    best = np.inf
    for k in range(max_iter):
        sigma = leverage_scores(A, w**exponent)
        residual = float(np.abs(sigma / w - 1.0).max())
        best = min(best, residual)
        if residual <= tol:
            return w, residual, k
        direction = sigma / w
        direction -= direction.max()  # shift-invariant after renormalization
        eta = step
        for _ in range(40):
            candidate = np.log(w) + eta * direction
            candidate = np.exp(candidate - candidate.max())
            candidate = np.maximum(d * candidate / candidate.sum(), SCORE_FLOOR)
            new_value = _logdet_objective(A, candidate, p)
            if new_value >= value - 1e-13 * abs(value):
                break
            eta *= 0.5
        w, value = candidate, new_value
    raise ConvergenceError(
        f"simplex ascent did not reach tol={tol:.1e} within {max_iter} "
        f"iterations (best residual {best:.3e})",
        best_residual=best,
    )


def reference_lewis_weights(
    A: np.ndarray,
    p: float,
    tol: float = 1e-10,
    *,
    method: str = "auto",
    w0: np.ndarray | None = None,
) -> ReferenceWeights:
    """Compute reference Lewis weights to a certified residual.

    Parameters
    ----------
    A : array_like of shape (n, d)
        Tall full-rank matrix.
    p : float
        Norm exponent, p >= 2.
    tol : float
        Target for the multiplicative fixed-point residual, in
        (1e-12, 1e-2).
    method : {"auto", "contractive", "damped", "simplex_logdet"}
        "auto" picks contractive for p < 4 and damped otherwise. The
        contractive route is refused for p >= 4 (no contraction guarantee)
        and the other two for p == 2, where they degenerate.
    w0 : array_like or None
        Optional positive starting point (used by uniqueness probes);
        defaults to the uniform vector d/n.

    Raises
    ------
    ConvergenceError
        If the iteration cap is hit; carries the best residual achieved.
    """
    A = validate_matrix(A)
    p = validate_p(p)
    if not (1e-12 < tol < 1e-2):
        raise ValueError(f"tol must lie in (1e-12, 1e-2), got {tol}")
    n, d = A.shape
    if method == "auto":
        method = "contractive" if p < 4.0 else "damped"
    if w0 is None:
        w = np.full(n, d / n)
    else:
        w = validate_weights(np.asarray(w0, dtype=np.float64), n=n, name="w0")

    if method == "contractive":
        if p >= 4.0:
            raise ValueError("contractive route requires p < 4")
        w, residual, iterations = _iterate_to_fixed_point(
            A, w, p, tol, damped=False, max_iter=MAX_FIXED_POINT_ITERATIONS
        )
    elif method == "damped":
        if p == 2.0:
            # At p = 2 the damped map is the identity; one exact leverage
            # computation already is the fixed point.
            w = leverage_scores(A)
            residual = fixed_point_residual(A, w, p)
            iterations = 1
        else:
            w, residual, iterations = _iterate_to_fixed_point(
                A, w, p, tol, damped=True, max_iter=MAX_FIXED_POINT_ITERATIONS
            )
    elif method == "simplex_logdet":
        if p == 2.0:
            raise ValueError("simplex_logdet route requires p > 2")
        w, residual, iterations = _ascend_simplex(
            A, w, p, tol, max_iter=MAX_ASCENT_ITERATIONS
        )
    else:
        raise ValueError(f"unknown method {method!r}")
    return ReferenceWeights(
        weights=w, residual=residual, iterations=iterations, method=method
    )
