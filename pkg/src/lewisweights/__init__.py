"""Two-sided approximate lp Lewis weights for tall matrices, p >= 2.

Lewis weights generalize leverage scores from the l2 geometry to lp: they
are the unique positive fixed point w = sigma(W^{1/2-1/p} A). This package
computes certified two-sided multiplicative approximations of that fixed
point using only (exact or sketched) leverage-score computations, and ships
the certificate checkers and a brute-force reference solver used to
validate every run.
"""

__version__ = "0.1.0"

from .core import (
    Certificate,
    LewisWeightsResult,
    Schedule,
    check_estimate,
    check_one_sided,
    check_two_sided,
    derive_schedule,
    fixed_point_map,
    one_sided_phase,
    quadratic_form_sandwich,
    two_sided_error_bound,
    two_sided_lewis,
)
from .estimator import LpLewisWeights
from .io import RunReport, load_matrix, parse_report, render_report
from .linalg import (
    SketchConfig,
    gram,
    leverage_scores,
    sketched_leverage_scores,
    solve_spd,
)
from .oracle import ReferenceWeights, fixed_point_residual, reference_lewis_weights
from .validation import (
    ConditioningError,
    ConvergenceError,
    MatrixValidationError,
    ParseError,
    validate_matrix,
    validate_weights,
)

__all__ = [
    "Certificate",
    "ConditioningError",
    "ConvergenceError",
    "LewisWeightsResult",
    "LpLewisWeights",
    "MatrixValidationError",
    "ParseError",
    "ReferenceWeights",
    "RunReport",
    "Schedule",
    "SketchConfig",
    "__version__",
    "check_estimate",
    "check_one_sided",
    "check_two_sided",
    "derive_schedule",
    "fixed_point_map",
    "fixed_point_residual",
    "gram",
    "leverage_scores",
    "load_matrix",
    "one_sided_phase",
    "parse_report",
    "quadratic_form_sandwich",
    "reference_lewis_weights",
    "render_report",
    "sketched_leverage_scores",
    "solve_spd",
    "two_sided_error_bound",
    "two_sided_lewis",
    "validate_matrix",
    "validate_weights",
]
