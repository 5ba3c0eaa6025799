"""Two-sided approximate lp Lewis weights from approximate leverage scores.

The lp Lewis weights of a tall matrix A are the unique strictly positive
vector w satisfying w = sigma(W^{1/2-1/p} A), where sigma are leverage
scores and W = Diag(w). The driver here computes a two-sided multiplicative
approximation of that fixed point in two phases:

1. an averaging phase: starting from the uniform vector d/n, repeatedly
   replace the weights by (approximate) leverage scores of the reweighted
   matrix and average all iterates, which yields a one-sided approximation
   whose l1 norm stays near d;
2. a single reweighting step v_i = w_i * (s_i / w_i)^{p/2} against fresh
   score estimates s, which converts the one-sided approximation into a
   two-sided one.

Every run is certified a posteriori: the certificate checkers below measure
the actual coordinate-wise ratios with exact leverage scores, so a passing
run never rests on the theory alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
import scipy.linalg

from .linalg import (
    SCORE_FLOOR,
    SketchConfig,
    gram,
    leverage_scores,
    sketched_leverage_scores,
)
from .validation import (
    validate_accuracy,
    validate_matrix,
    validate_p,
    validate_weights,
)

# Iteration count guard; schedules beyond this are a configuration error.
MAX_ITERATIONS = 2**31

# Default multiplicative slack so floating point rounding cannot flip a
# mathematically true certificate.
DEFAULT_SLACK = 1e-6


def _scaling_exponent(p: float) -> float:
    # Row scaling feeding the Gram matrix: c = w^(1 - 2/p).
    return 1.0 - 2.0 / p


@dataclass(frozen=True)
class Schedule:
    """Derived iteration schedule for a (p, alpha, n, d) instance.

    eps1 is the per-iterate score accuracy of the averaging phase (each call
    is made at eps1 / 4), eps2 the accuracy of the final reweighting scores,
    and num_rounds the number of averaged iterates.
    """

    eps1: float
    eps2: float
    num_rounds: int


def derive_schedule(p: float, alpha: float, n: int, d: int) -> Schedule:
    """Compute the accuracy/iteration schedule from first principles.

    eps1 = alpha / (100 p d), eps2 = alpha / (3 p), and
    num_rounds = max(1, ceil(2 ln(n/d) / eps1)). Natural logarithm; the
    floor of 1 keeps the degenerate n == d case well defined.
    """
    p = validate_p(p)
    alpha = validate_accuracy(alpha)
    if n < d or d < 1:
        raise ValueError(f"need n >= d >= 1, got n={n}, d={d}")
    eps1 = alpha / (100.0 * p * d)
    eps2 = alpha / (3.0 * p)
    rounds = max(1, math.ceil(2.0 * math.log(n / d) / eps1))
    if rounds > MAX_ITERATIONS:
        raise ValueError(
            f"schedule of {rounds} rounds exceeds the 2^31 iteration guard; "
            "increase alpha (fewer, coarser rounds) or reduce p"
        )
    return Schedule(eps1=eps1, eps2=eps2, num_rounds=rounds)


@dataclass(frozen=True)
class Certificate:
    """Measured approximation certificate.

    kind is one of "one_sided", "two_sided", "estimate". min_ratio and
    max_ratio are the extreme coordinate-wise ratios actually measured
    (score/weight for one-sided, weight/score for two-sided, weight/reference
    for estimate). l1_norm is reported for the one-sided notion only.
    n_floored counts weight entries clamped at the positivity floor.
    """

    kind: str
    eps_target: float
    slack: float
    min_ratio: float
    max_ratio: float
    passed: bool
    l1_norm: float | None = None
    n_floored: int = 0

    def to_dict(self) -> dict:
        out = {
            "kind": self.kind,
            "eps_target": self.eps_target,
            "slack": self.slack,
            "min_ratio": self.min_ratio,
            "max_ratio": self.max_ratio,
            "n_floored": self.n_floored,
            "pass": self.passed,
        }
        if self.l1_norm is not None:
            out["l1_norm"] = self.l1_norm
        return out

    @staticmethod
    def from_dict(data: dict) -> "Certificate":
        return Certificate(
            kind=data["kind"],
            eps_target=data["eps_target"],
            slack=data["slack"],
            min_ratio=data["min_ratio"],
            max_ratio=data["max_ratio"],
            passed=data["pass"],
            l1_norm=data.get("l1_norm"),
            n_floored=data.get("n_floored", 0),
        )


def check_one_sided(
    A: np.ndarray,
    w: np.ndarray,
    p: float,
    eps: float,
    slack: float = DEFAULT_SLACK,
) -> Certificate:
    """Certify the one-sided notion: scores dominated by weights, small l1.

    Passes iff sigma_i(W^{1/2-1/p} A) <= (1+eps)(1+slack) w_i for all i and
    ||w||_1 <= (1+eps)(1+slack) d, with sigma computed exactly. The reported
    ratios are sigma_i / w_i.
    """
    A = validate_matrix(A, check_rank=False)
    w = validate_weights(w, n=A.shape[0])
    p = validate_p(p)
    sigma = leverage_scores(A, w ** _scaling_exponent(p))
    ratios = sigma / w
    l1 = float(w.sum())
    bound = (1.0 + eps) * (1.0 + slack)
    passed = bool(ratios.max() <= bound and l1 <= bound * A.shape[1])
    return Certificate(
        kind="one_sided",
        eps_target=float(eps),
        slack=float(slack),
        min_ratio=float(ratios.min()),
        max_ratio=float(ratios.max()),
        passed=passed,
        l1_norm=l1,
    )


def check_two_sided(
    A: np.ndarray,
    v: np.ndarray,
    p: float,
    eps: float,
    slack: float = DEFAULT_SLACK,
) -> Certificate:
    """Certify the two-sided notion: weights within (1 +- eps) of scores.

    Passes iff (1-eps)(1-slack) <= v_i / sigma_i(V^{1/2-1/p} A)
    <= (1+eps)(1+slack) for all i, with sigma computed exactly.
    """
    A = validate_matrix(A, check_rank=False)
    v = validate_weights(v, n=A.shape[0], name="v")
    p = validate_p(p)
    sigma = leverage_scores(A, v ** _scaling_exponent(p))
    with np.errstate(divide="ignore"):
        ratios = v / sigma
    lo = (1.0 - eps) * (1.0 - slack)
    hi = (1.0 + eps) * (1.0 + slack)
    passed = bool(ratios.min() >= lo and ratios.max() <= hi)
    return Certificate(
        kind="two_sided",
        eps_target=float(eps),
        slack=float(slack),
        min_ratio=float(ratios.min()),
        max_ratio=float(ratios.max()),
        passed=passed,
    )


def check_estimate(v: np.ndarray, w_ref: np.ndarray, eps: float) -> Certificate:
    """Certify coordinate-wise agreement with reference weights.

    Passes iff every ratio v_i / w_ref_i lies in [1-eps, 1+eps].
    """
    v = validate_weights(v, name="v")
    w_ref = validate_weights(w_ref, n=v.shape[0], name="w_ref")
    ratios = v / w_ref
    passed = bool(ratios.min() >= 1.0 - eps and ratios.max() <= 1.0 + eps)
    return Certificate(
        kind="estimate",
        eps_target=float(eps),
        slack=0.0,
        min_ratio=float(ratios.min()),
        max_ratio=float(ratios.max()),
        passed=passed,
    )


def two_sided_error_bound(eps: float, p: float, d: int) -> float:
    """Two-sided error guaranteed after one reweighting step.

    A one-sided eps-approximation turns, after one reweighting step, into a
    two-sided approximation at 3 eps (p/2 - 1) (1 + eps)^{p/2 - 1} d. Exact
    evaluation of that expression; vanishes at p = 2 and at eps = 0.
    """
    if eps < 0:
        raise ValueError(f"eps must be nonnegative, got {eps}")
    p = validate_p(p)
    if d < 1:
        raise ValueError(f"d must be positive, got {d}")
    half = p / 2.0 - 1.0
    return 3.0 * eps * half * math.exp(half * math.log1p(eps)) * d


def _reweighting_step(w: np.ndarray, scores: np.ndarray, p: float) -> np.ndarray:
    """Apply v_i = w_i * (scores_i / w_i)^{p/2} in log space.

    Log space keeps w^{1 - p/2} finite for large p; a non-finite result
    still raises, since no downstream consumer can absorb it.
    """
    log_w = np.log(w)
    log_s = np.log(np.maximum(scores, SCORE_FLOOR))
    with np.errstate(over="ignore"):
        v = np.exp(log_w + 0.5 * p * (log_s - log_w))
    if not np.isfinite(v).all():
        raise FloatingPointError(
            "reweighting step overflowed; weights span too many orders of "
            "magnitude for this p"
        )
    return v


def fixed_point_map(
    A: np.ndarray,
    w: np.ndarray,
    p: float,
    *,
    scores: np.ndarray | None = None,
) -> np.ndarray:
    """One reweighting step of the Lewis-weight fixed point iteration.

    Returns v with v_i = w_i * (sigma_i / w_i)^{p/2} where sigma are the
    leverage scores of W^{1/2-1/p} A (computed exactly unless precomputed
    estimates are supplied via ``scores``). Algebraically this also equals
    (a_i^T (A^T W^{1-2/p} A)^{-1} a_i)^{p/2}.
    """
    A = validate_matrix(A, check_rank=False)
    w = validate_weights(w, n=A.shape[0])
    p = validate_p(p)
    if scores is None:
        scores = leverage_scores(A, w ** _scaling_exponent(p))
    return _reweighting_step(w, np.asarray(scores, dtype=np.float64), p)


def quadratic_form_sandwich(
    A: np.ndarray,
    w: np.ndarray,
    v: np.ndarray,
    p: float,
) -> tuple[float, float]:
    """Extreme generalized eigenvalues of the weighted Gram pencil.

    Returns (lambda_min, lambda_max) of the pencil
    (A^T V^{1-2/p} A, A^T W^{1-2/p} A). Both 1.0 exactly when v == w; scalar
    reweighting v = t * w shifts both to t^{1-2/p}.
    """
    A = validate_matrix(A, check_rank=False)
    w = validate_weights(w, n=A.shape[0])
    v = validate_weights(v, n=A.shape[0], name="v")
    p = validate_p(p)
    e = _scaling_exponent(p)
    G_w = gram(A, w**e)
    G_v = gram(A, v**e)
    vals = scipy.linalg.eigh(G_v, G_w, eigvals_only=True, check_finite=False)
    return float(vals[0]), float(vals[-1])


def _mix_seed(seed: int, counter: int) -> int:
    """Derive a fresh 64-bit seed for call number ``counter``."""
    return int(np.random.SeedSequence([seed, counter]).generate_state(1, np.uint64)[0])


class _ScoreBackend:
    """Leverage-score oracle used by the driver; counts its own calls."""

    def __init__(
        self,
        kind: str,
        *,
        delta_per_call: float = 1e-2,
        seed: int = 0,
        eps_override: float | None = None,
        rows_per_inv_eps2: float = 40.0,
    ):
        if kind not in ("exact", "sketch"):
            raise ValueError(f"backend must be 'exact' or 'sketch', got {kind!r}")
        self.kind = kind
        self.delta_per_call = delta_per_call
        self.seed = seed
        self.eps_override = eps_override
        self.rows_per_inv_eps2 = rows_per_inv_eps2
        self.calls = 0

    def __call__(self, A: np.ndarray, scaling: np.ndarray, eps: float) -> np.ndarray:
        self.calls += 1
        if self.kind == "exact":
            return leverage_scores(A, scaling)
        eps = self.eps_override if self.eps_override is not None else eps
        config = SketchConfig(
            eps=eps,
            delta=self.delta_per_call,
            seed=_mix_seed(self.seed, self.calls),
            rows_per_inv_eps2=self.rows_per_inv_eps2,
        )
        return sketched_leverage_scores(A, scaling, config)


def _make_backend(
    backend: str,
    schedule: Schedule,
    *,
    seed: int,
    sketch_eps: float | None,
    sketch_delta_total: float,
    rows_per_inv_eps2: float,
) -> _ScoreBackend:
    if backend == "sketch":
        sketch_delta_total = validate_accuracy(
            sketch_delta_total, name="sketch_delta_total"
        )
    # Union bound: the run makes num_rounds + 1 estimate calls, so each call
    # gets an equal share of the total failure budget.
    return _ScoreBackend(
        backend,
        delta_per_call=sketch_delta_total / (schedule.num_rounds + 1),
        seed=seed,
        eps_override=sketch_eps,
        rows_per_inv_eps2=rows_per_inv_eps2,
    )


def _averaging_phase(
    A: np.ndarray,
    p: float,
    schedule: Schedule,
    score_fn: _ScoreBackend,
    *,
    mode: str,
    check_stride: int,
    slack: float,
) -> tuple[np.ndarray, int]:
    """Run the one-sided averaging phase; returns (weights, iterations).

    Faithful mode executes exactly schedule.num_rounds iterations (one score
    call each) and returns the average of all iterates. Adaptive mode
    additionally certifies the running average every ``check_stride``
    iterations against the one-sided notion at 2 * eps1 and stops at the
    first pass; the exactness of the certificate (not the estimated scores)
    is what licenses the early exit.
    """
    n, d = A.shape
    exponent = _scaling_exponent(p)
    call_eps = schedule.eps1 / 4.0
    w = np.full(n, d / n)
    acc = np.zeros(n)
    for k in range(1, schedule.num_rounds + 1):
        acc += w
        sigma = score_fn(A, w**exponent, call_eps)
        w = np.maximum(sigma, SCORE_FLOOR)
        if (
            mode == "adaptive"
            and k % check_stride == 0
            and k < schedule.num_rounds
        ):
            avg = np.maximum(acc / k, SCORE_FLOOR)
            cert = check_one_sided(A, avg, p, 2.0 * schedule.eps1, slack)
            if cert.passed:
                return avg, k
    return np.maximum(acc / schedule.num_rounds, SCORE_FLOOR), schedule.num_rounds


def one_sided_phase(
    A: np.ndarray,
    p: float,
    alpha: float,
    *,
    mode: str = "faithful",
    backend: str = "exact",
    sketch_eps: float | None = None,
    sketch_delta_total: float = 1e-2,
    rows_per_inv_eps2: float = 40.0,
    adaptive_check_stride: int = 100,
    slack: float = DEFAULT_SLACK,
    seed: int = 0,
) -> np.ndarray:
    """One-sided approximate Lewis weights by iterate averaging.

    Returns weights w with sigma(W^{1/2-1/p} A) <= (1 + 2 eps1) w and
    ||w||_1 <= (1 + eps1/4) d for eps1 from the derived schedule.
    """
    A = validate_matrix(A)
    p = validate_p(p)
    if mode not in ("faithful", "adaptive"):
        raise ValueError(f"mode must be 'faithful' or 'adaptive', got {mode!r}")
    if adaptive_check_stride < 1:
        raise ValueError("adaptive_check_stride must be a positive integer")
    schedule = derive_schedule(p, alpha, *A.shape)
    score_fn = _make_backend(
        backend,
        schedule,
        seed=seed,
        sketch_eps=sketch_eps,
        sketch_delta_total=sketch_delta_total,
        rows_per_inv_eps2=rows_per_inv_eps2,
    )
    w, _ = _averaging_phase(
        A,
        p,
        schedule,
        score_fn,
        mode=mode,
        check_stride=adaptive_check_stride,
        slack=slack,
    )
    return w


@dataclass(frozen=True)
class LewisWeightsResult:
    """Everything a run of the two-sided solver produced.

    weights is the two-sided approximation; certificate its measured
    two-sided certificate at eps = alpha. one_sided_weights is the averaged
    phase-1 vector with its own certificate at eps = 2 * eps1.
    leverage_calls counts backend score estimates only (certificate checks
    are not backend calls); in faithful mode it equals num_rounds + 1.
    """

    weights: np.ndarray
    certificate: Certificate
    one_sided_weights: np.ndarray
    one_sided_certificate: Certificate
    schedule: Schedule
    iterations: int
    leverage_calls: int
    p: float
    alpha: float
    mode: str
    backend: dict


def two_sided_lewis(
    A: np.ndarray,
    p: float,
    alpha: float,
    *,
    mode: str = "faithful",
    backend: str = "exact",
    sketch_eps: float | None = None,
    sketch_delta_total: float = 1e-2,
    rows_per_inv_eps2: float = 40.0,
    adaptive_check_stride: int = 100,
    slack: float = DEFAULT_SLACK,
    seed: int = 0,
) -> LewisWeightsResult:
    """Compute a certified two-sided alpha-approximation of the Lewis weights.

    Parameters
    ----------
    A : array_like of shape (n, d)
        Tall full-rank matrix.
    p : float
        Norm exponent, p >= 2.
    alpha : float
        Target two-sided accuracy in (0, 1).
    mode : {"faithful", "adaptive"}
        Faithful runs the full derived schedule; adaptive may exit the
        averaging phase early once its one-sided certificate passes.
    backend : {"exact", "sketch"}
        Exact QR-based scores, or the randomized sign-sketch estimator.
    sketch_eps : float or None
        Override for the per-call sketch accuracy; None uses the accuracy
        the schedule dictates for each call (eps1/4, then eps2).
    sketch_delta_total : float
        Total failure probability budget split evenly over all score calls.
    adaptive_check_stride : int
        Iterations between early-exit certificate checks in adaptive mode.
    slack : float
        Multiplicative rounding slack applied by certificate checks.
    seed : int
        Master seed for the sketched backend.

    Returns
    -------
    LewisWeightsResult
        Weights, both certificates, schedule and call accounting.
    """
    A = validate_matrix(A)
    p = validate_p(p)
    alpha = validate_accuracy(alpha)
    if adaptive_check_stride < 1:
        raise ValueError("adaptive_check_stride must be a positive integer")
    if mode not in ("faithful", "adaptive"):
        raise ValueError(f"mode must be 'faithful' or 'adaptive', got {mode!r}")
    schedule = derive_schedule(p, alpha, *A.shape)
    score_fn = _make_backend(
        backend,
        schedule,
        seed=seed,
        sketch_eps=sketch_eps,
        sketch_delta_total=sketch_delta_total,
        rows_per_inv_eps2=rows_per_inv_eps2,
    )
    w, iterations = _averaging_phase(
        A,
        p,
        schedule,
        score_fn,
        mode=mode,
        check_stride=adaptive_check_stride,
        slack=slack,
    )
    n_floored = int(np.count_nonzero(w <= SCORE_FLOOR))
    s = score_fn(A, w ** _scaling_exponent(p), schedule.eps2)
    v = _reweighting_step(w, s, p)
    certificate = replace(
        check_two_sided(A, v, p, alpha, slack), n_floored=n_floored
    )
    one_sided_certificate = replace(
        check_one_sided(A, w, p, 2.0 * schedule.eps1, slack), n_floored=n_floored
    )
    if backend == "sketch":
        backend_desc = {
            "name": "sketch",
            "seed": seed,
            "eps": sketch_eps,
            "delta": sketch_delta_total,
        }
    else:
        backend_desc = {"name": "exact"}
    return LewisWeightsResult(
        weights=v,
        certificate=certificate,
        one_sided_weights=w,
        one_sided_certificate=one_sided_certificate,
        schedule=schedule,
        iterations=iterations,
        leverage_calls=score_fn.calls,
        p=p,
        alpha=alpha,
        mode=mode,
        backend=backend_desc,
    )
