"""Scikit-learn style estimator facade over the Lewis-weight solver."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .core import two_sided_lewis
from .validation import validate_matrix


class LpLewisWeights(BaseEstimator, TransformerMixin):
    """Row-importance weights for the lp geometry of a tall matrix.

    ``fit(X)`` computes a certified two-sided ``alpha``-approximation of the
    lp Lewis weights of ``X`` and stores them as ``weights_``. ``transform``
    returns the reweighted matrix ``Diag(weights_ ** (1/2 - 1/p)) @ X``,
    whose (approximate) leverage scores are the fitted weights; that is the
    matrix row-sampling schemes actually draw from.

    Unlike feature-space transformers, the weights are row aligned:
    ``transform`` only accepts a matrix with the same shape as the one that
    was fitted, and ``fit_transform`` is the intended one-shot usage.

    Parameters
    ----------
    p : float, default=2.0
        Norm exponent, p >= 2. At p = 2 the weights are the leverage scores.
    alpha : float, default=0.1
        Two-sided accuracy target in (0, 1).
    mode : {"faithful", "adaptive"}, default="faithful"
        Faithful runs the full derived iteration schedule; adaptive may
        stop early once the one-sided certificate passes.
    backend : {"exact", "sketch"}, default="exact"
    sketch_eps : float or None, default=None
        Per-call accuracy override for the sketched backend.
    sketch_delta_total : float, default=0.01
        Total failure budget of a sketched run.
    adaptive_check_stride : int, default=100
    slack : float, default=1e-6
        Rounding slack of the certificate checks.
    random_state : int, default=0
        Seed for the sketched backend.

    Attributes
    ----------
    weights_ : ndarray of shape (n,)
        Two-sided approximate Lewis weights of the fitted matrix.
    certificate_ : Certificate
        Measured two-sided certificate at eps = alpha.
    one_sided_certificate_ : Certificate
        Certificate of the averaging phase at eps = 2 * eps1.
    result_ : LewisWeightsResult
        Full run record (schedule, iteration and call counts).
    n_features_in_ : int

    Examples
    --------
    >>> import numpy as np
    >>> from lewisweights import LpLewisWeights
    >>> X = np.random.default_rng(0).standard_normal((40, 3))
    >>> est = LpLewisWeights(p=4, alpha=0.5).fit(X)
    >>> bool(est.certificate_.passed)
    True
    >>> float(np.round(est.weights_.sum(), 1))
    3.0
    """

    def __init__(
        self,
        p: float = 2.0,
        alpha: float = 0.1,
        *,
        mode: str = "faithful",
        backend: str = "exact",
        sketch_eps: float | None = None,
        sketch_delta_total: float = 0.01,
        adaptive_check_stride: int = 100,
        slack: float = 1e-6,
        random_state: int = 0,
    ):
        self.p = p
        self.alpha = alpha
        self.mode = mode
        self.backend = backend
        self.sketch_eps = sketch_eps
        self.sketch_delta_total = sketch_delta_total
        self.adaptive_check_stride = adaptive_check_stride
        self.slack = slack
        self.random_state = random_state

    def fit(self, X, y=None):
        """Compute the Lewis weights of X; y is ignored."""
        X = validate_matrix(X, name="X")
        result = two_sided_lewis(
            X,
            self.p,
            self.alpha,
            mode=self.mode,
            backend=self.backend,
            sketch_eps=self.sketch_eps,
            sketch_delta_total=self.sketch_delta_total,
            adaptive_check_stride=self.adaptive_check_stride,
            slack=self.slack,
            seed=self.random_state,
        )
        self.result_ = result
        self.weights_ = result.weights
        self.certificate_ = result.certificate
        self.one_sided_certificate_ = result.one_sided_certificate
        self.n_rows_ = X.shape[0]
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        """Reweight rows of X by weights_ ** (1/2 - 1/p).

        X must have the same shape as the fitted matrix (the weights are
        row aligned).
        """
        check_is_fitted(self, "weights_")
        X = validate_matrix(X, name="X", check_rank=False)
        if X.shape != (self.n_rows_, self.n_features_in_):
            raise ValueError(
                f"X has shape {X.shape}, but weights were fitted on "
                f"({self.n_rows_}, {self.n_features_in_}); Lewis weights "
                "are row aligned"
            )
        return (self.weights_ ** (0.5 - 1.0 / self.p))[:, None] * X

    def sampling_probabilities(self) -> np.ndarray:
        """Fitted weights normalized to a probability vector."""
        check_is_fitted(self, "weights_")
        return self.weights_ / self.weights_.sum()
