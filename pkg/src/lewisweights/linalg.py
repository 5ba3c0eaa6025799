"""Weighted Gram matrices and (exact or sketched) weighted leverage scores.

The leverage score of row i of a matrix B is b_i^T (B^T B)^+ b_i. Everything
here works on the row-scaled matrix B = Diag(c)^{1/2} A for a strictly
positive per-row scaling c, since that is the only form the Lewis-weight
iteration ever needs. Exact scores go through a thin QR factorization of the
scaled matrix (never through the explicit Gram matrix, which would square the
condition number); the Gram matrix itself is still exposed for spectral
sandwich tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .validation import ConditioningError, ConvergenceError, validate_weights

# Floor applied to sketched estimates so downstream exponentiation by p/2
# never sees an exact zero.
SCORE_FLOOR = 1e-300

# Pre-clamp excess beyond 1 that is still attributed to rounding; anything
# larger indicates a broken factorization.
_EXCESS_TOL = 1e-8

# Relative sum defect tolerated in sum(scores) == d.
_SUM_TOL = 1e-9

# Block cap (in doubles) when materializing sketch rows.
_SKETCH_BLOCK_ENTRIES = 10_000_000


def scaled_rows(A: np.ndarray, scaling: np.ndarray | None) -> np.ndarray:
    """Return Diag(scaling)^{1/2} A without forming the diagonal matrix."""
    if scaling is None:
        return A
    return A * np.sqrt(scaling)[:, None]


_geqrf, _orgqr = scipy.linalg.lapack.get_lapack_funcs(
    ("geqrf", "orgqr"), (np.empty((2, 1), dtype=np.float64),)
)
_lwork_cache: dict[tuple[int, int], tuple[int, int]] = {}


def _thin_q(B: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal factor of a thin QR plus |diag(R)|, via raw LAPACK.

    Saves roughly half the wrapper overhead of numpy's qr on the small
    matrices this library iterates over millions of times. B is consumed.
    """
    n, d = B.shape
    lwork = _lwork_cache.get((n, d))
    if lwork is None:
        qr_work = _geqrf(B, lwork=-1, overwrite_a=False)[2]
        q_work = _orgqr(np.zeros((n, d), order="F"), np.zeros(d), lwork=-1)[1]
        lwork = (int(qr_work[0].real), int(q_work[0].real))
        _lwork_cache[(n, d)] = lwork
    qr_, tau, _, info = _geqrf(B, lwork=lwork[0], overwrite_a=True)
    if info != 0:
        raise ConditioningError(f"QR factorization failed (info={info})")
    rdiag = np.abs(np.diag(qr_[:d, :d]))
    Q, _, info = _orgqr(qr_[:, :d], tau, lwork=lwork[1], overwrite_a=True)
    if info != 0:
        raise ConditioningError(f"orthonormal factor failed (info={info})")
    return Q, rdiag


def gram(A: np.ndarray, scaling: np.ndarray | None = None) -> np.ndarray:
    """Weighted Gram matrix A^T Diag(scaling) A, symmetrized, checked SPD.

    Parameters
    ----------
    A : ndarray of shape (n, d)
        Full column rank input.
    scaling : ndarray of shape (n,) or None
        Strictly positive per-row scaling; None means all ones.

    Returns
    -------
    ndarray of shape (d, d)
        Symmetric positive definite matrix.

    Raises
    ------
    ConditioningError
        If the result is singular to working precision; the message names
        the smallest pivot found.
    """
    if scaling is not None:
        scaling = validate_weights(scaling, n=A.shape[0], name="scaling")
        G = A.T @ (scaling[:, None] * A)
    else:
        G = A.T @ A
    G = 0.5 * (G + G.T)
    try:
        scipy.linalg.cholesky(G, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        pivot = float(np.linalg.eigvalsh(G)[0])
        raise ConditioningError(
            f"weighted Gram matrix is singular to working precision "
            f"(smallest pivot {pivot:.3e})",
            smallest_pivot=pivot,
        ) from exc
    return G


def leverage_scores(A: np.ndarray, scaling: np.ndarray | None = None) -> np.ndarray:
    """Exact leverage scores of Diag(scaling)^{1/2} A.

    Computed as squared row norms of the orthonormal factor of a thin QR of
    the scaled matrix. Scores are clamped to [0, 1]; pre-clamp excess beyond
    1 + 1e-8 or a sum defect beyond 1e-9 * d is treated as a conditioning
    failure rather than silently repaired.

    Returns
    -------
    ndarray of shape (n,)
        Scores in [0, 1] summing to d (within 1e-9 * d).
    """
    if scaling is None:
        B = A.copy()
    else:
        B = A * np.sqrt(scaling)[:, None]
    d = B.shape[1]
    Q, rdiag = _thin_q(B)
    smallest = float(rdiag.min(initial=np.inf))
    if smallest <= d * np.finfo(np.float64).eps * rdiag.max(initial=0.0):
        raise ConditioningError(
            f"scaled matrix is singular to working precision "
            f"(smallest pivot {smallest:.3e})",
            smallest_pivot=smallest,
        )
    sigma = np.einsum("ij,ij->i", Q, Q)
    excess = float(sigma.max(initial=0.0)) - 1.0
    if excess > _EXCESS_TOL:
        raise ConditioningError(
            f"leverage score exceeds 1 by {excess:.3e}; factorization unreliable",
            smallest_pivot=smallest,
        )
    np.clip(sigma, 0.0, 1.0, out=sigma)
    defect = abs(float(sigma.sum()) - d)
    if defect > _SUM_TOL * d:
        raise ConditioningError(
            f"leverage scores sum to d with defect {defect:.3e}; "
            "factorization unreliable",
            smallest_pivot=smallest,
        )
    return sigma


@dataclass(frozen=True)
class SketchConfig:
    """Configuration of the dense sign-matrix leverage score estimator.

    The sketch has ceil(rows_per_inv_eps2 * log(n / delta) / eps**2) rows.
    The default constant 40 leaves a comfortable margin for the subspace
    embedding property whenever d is at most a modest multiple of log n,
    which covers the tall-matrix regime this library targets. When the
    derived sketch is at least as tall as the input, the estimator falls
    back to the exact computation (which satisfies every guarantee with
    probability one and is cheaper).

    Attributes
    ----------
    eps : float
        Multiplicative accuracy target, in (0, 1).
    delta : float
        Failure probability budget for this call, in (0, 1).
    seed : int
        RNG seed; identical configs on identical inputs give bitwise
        identical estimates.
    rows_per_inv_eps2 : float
        Overridable sketch-size constant.
    """

    eps: float
    delta: float
    seed: int
    rows_per_inv_eps2: float = 40.0

    def __post_init__(self):
        if not (0.0 < self.eps < 1.0):
            raise ValueError(f"sketch eps must lie in (0, 1), got {self.eps}")
        if not (0.0 < self.delta < 1.0):
            raise ValueError(f"sketch delta must lie in (0, 1), got {self.delta}")
        if self.rows_per_inv_eps2 <= 0:
            raise ValueError("rows_per_inv_eps2 must be positive")

    def sketch_rows(self, n: int) -> int:
        """Sketch row count for an n-row input."""
        return int(
            np.ceil(self.rows_per_inv_eps2 * np.log(n / self.delta) / self.eps**2)
        )


def _sketch_product(B: np.ndarray, m: int, seed: int) -> np.ndarray:
    """Compute S @ B for an m x n matrix S of i.i.d. +-1/sqrt(m) signs.

    S is generated in row blocks so memory stays bounded; the stream of
    random draws, hence the result, depends only on (shape, seed).
    """
    n = B.shape[0]
    rng = np.random.default_rng(seed)
    out = np.empty((m, B.shape[1]), dtype=np.float64)
    block = max(1, _SKETCH_BLOCK_ENTRIES // n)
    row = 0
    while row < m:
        b = min(block, m - row)
        signs = rng.integers(0, 2, size=(b, n)).astype(np.float64)
        signs *= 2.0
        signs -= 1.0
        out[row : row + b] = signs @ B
        row += b
    out /= np.sqrt(m)
    return out


def sketched_leverage_scores(
    A: np.ndarray,
    scaling: np.ndarray | None,
    config: SketchConfig,
) -> np.ndarray:
    """Estimate leverage scores of Diag(scaling)^{1/2} A by sign sketching.

    With probability at least 1 - delta all coordinates satisfy
    (1 - eps) * sigma_i <= estimate_i <= (1 + eps) * sigma_i. Estimates are
    clamped to (1e-300, 1]. Deterministic given the seed.

    The estimate is the quadratic form of each scaled row against the
    inverse Gram matrix of the sketched matrix S B: when S embeds the column
    space of B with low distortion, those quadratic forms match the exact
    scores multiplicatively, coordinate by coordinate.
    """
    B = scaled_rows(A, scaling)
    n, d = B.shape
    m = config.sketch_rows(n)
    if m >= n:
        # Sketching above the input height cannot help; the exact path
        # satisfies the contract with probability one.
        sigma = leverage_scores(A, scaling)
        return np.clip(sigma, SCORE_FLOOR, 1.0)
    if m < d:
        raise ValueError(
            f"sketch of {m} rows cannot preserve a rank-{d} column space; "
            "increase rows_per_inv_eps2 or loosen eps"
        )
    SB = _sketch_product(B, m, config.seed)
    R = np.linalg.qr(SB, mode="r")
    rdiag = np.abs(np.diag(R))
    smallest = float(rdiag.min(initial=np.inf))
    if smallest <= d * np.finfo(np.float64).eps * rdiag.max(initial=0.0):
        raise ConditioningError(
            f"sketched matrix is singular to working precision "
            f"(smallest pivot {smallest:.3e})",
            smallest_pivot=smallest,
        )
    Y = scipy.linalg.solve_triangular(
        R, B.T, trans="T", lower=False, check_finite=False
    )
    sigma = np.einsum("ij,ij->j", Y, Y)
    return np.clip(sigma, SCORE_FLOOR, 1.0)


def solve_spd(M: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve M x = b for symmetric positive definite M.

    Cholesky solve with iterative refinement until the residual satisfies
    ||M x - b|| <= 1e-10 ||b||.

    Raises
    ------
    ConditioningError
        If M is not positive definite.
    ConvergenceError
        If refinement cannot reach the residual target.
    """
    M = np.asarray(M, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    try:
        factor = scipy.linalg.cho_factor(M, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        pivot = float(np.linalg.eigvalsh(0.5 * (M + M.T))[0])
        raise ConditioningError(
            f"matrix is not positive definite (smallest pivot {pivot:.3e})",
            smallest_pivot=pivot,
        ) from exc
    x = scipy.linalg.cho_solve(factor, b, check_finite=False)
    target = 1e-10 * float(np.linalg.norm(b))
    best = np.inf
    for _ in range(4):
        residual = float(np.linalg.norm(M @ x - b))
        best = min(best, residual)
        if residual <= target:
            return x
        x = x + scipy.linalg.cho_solve(factor, b - M @ x, check_finite=False)
    residual = float(np.linalg.norm(M @ x - b))
    if residual <= target:
        return x
    raise ConvergenceError(
        f"iterative refinement stalled at residual {min(best, residual):.3e} "
        f"(target {target:.3e})",
        best_residual=min(best, residual),
    )
