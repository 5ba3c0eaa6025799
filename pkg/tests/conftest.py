import numpy as np


def stacked_identity(d: int, k: int) -> np.ndarray:
    """k vertically stacked copies of the d x d identity (n = k * d rows)."""
    return np.vstack([np.eye(d)] * k)


def random_matrix(seed: int, n: int, d: int) -> np.ndarray:
    """Seeded Gaussian test matrix (full rank, no zero rows, a.s.)."""
    return np.random.default_rng(seed).standard_normal((n, d))


def conditioned_square(seed: int, d: int, cond: float = 100.0) -> np.ndarray:
    """Invertible d x d matrix with prescribed condition number."""
    rng = np.random.default_rng(seed)
    U, _ = np.linalg.qr(rng.standard_normal((d, d)))
    V, _ = np.linalg.qr(rng.standard_normal((d, d)))
    svals = np.logspace(0.0, -np.log10(cond), d)
    return U @ np.diag(svals) @ V.T


def explicit_weighted_scores(A: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Independent leverage-score oracle: c_i a_i^T pinv(A^T C A) a_i."""
    G = A.T @ (c[:, None] * A)
    Ginv = np.linalg.pinv(G)
    return c * np.einsum("ij,jk,ik->i", A, Ginv, A)
