"""Width order exponents for weighted smoothness classes, with desk-scale
numerical validation.

The package predicts the polynomial order of Kolmogorov widths of weighted
Sobolev-type classes from their scaling parameters, and checks the
prediction three ways: exact and numeric widths of the finite-dimensional
coefficient bodies, a constructive multi-scale piecewise-polynomial
scheme whose measured error tracks the predicted rate, and closed-form
bump-family lower bounds.
"""

__version__ = "0.1.0"

# version of the delimited output schemas (CSV headers, JSON error shape)
SCHEMA_VERSION = 1

from .errors import (
    AllocationError,
    DegenerateParameterError,
    InputDataError,
    NumericError,
    SchemaError,
    SizeLimitError,
    UnsupportedRegimeError,
    WidthLabError,
)
from .exponents import (
    INF,
    AbstractParams,
    Condition,
    ExponentPair,
    ExponentProfile,
    HypothesisReport,
    Prediction,
    SobolevProblem,
    SpaceParams,
    abstract_conditions,
    abstract_denominator,
    abstract_exponents,
    check_hypotheses,
    concrete_exponents,
    exponent_profile,
    load_problem,
    predicted_width_exponent,
    problem_from_dict,
    problem_to_abstract,
    problem_to_dict,
    recip,
)
from .ballwidths import (
    BallSpec,
    IntersectionSpec,
    SearchConfig,
    WidthEstimate,
    brute_force_width_oracle,
    exact_width,
    gluskin_order,
    interpolation_ball,
    intersection_width_upper,
    lq_distances,
    numeric_width_profile,
    numeric_width_upper,
    ring_level_body,
    ring_radii,
    sample_extreme_points,
)
from .multiscale import (
    Approximant,
    Cell,
    CriticalScales,
    DomainSpec,
    EnsembleMember,
    ErrorBreakdown,
    ExperimentRow,
    QuadratureSpec,
    RankAllocation,
    approximate,
    approximation_error,
    build_partition,
    check_membership,
    critical_scales,
    default_eps,
    default_quadrature,
    domain_for_problem,
    l2_project,
    project_eval,
    rank_allocation,
    refinement_children,
    ring_cells,
    ring_piece_count,
    ring_segments,
    run_experiment,
    target_norm,
    weight_functions,
    weighted_norm,
)
from .lowerbounds import (
    BOUND_LABELS,
    BumpFamily,
    BumpSpec,
    LowerBoundCurve,
    MatchedDepths,
    build_bump_family,
    bump_norms,
    ring_scaled_norms,
    log2_slope,
    lower_bound_curve,
    matched_depths,
    membership_ensemble,
)
from .rngs import substream

__all__ = [
    "__version__",
    "SCHEMA_VERSION",
    "WidthLabError",
    "SchemaError",
    "DegenerateParameterError",
    "UnsupportedRegimeError",
    "SizeLimitError",
    "NumericError",
    "AllocationError",
    "InputDataError",
    "INF",
    "SpaceParams",
    "ExponentPair",
    "AbstractParams",
    "SobolevProblem",
    "ExponentProfile",
    "Condition",
    "HypothesisReport",
    "Prediction",
    "recip",
    "abstract_denominator",
    "abstract_exponents",
    "problem_to_abstract",
    "concrete_exponents",
    "exponent_profile",
    "abstract_conditions",
    "check_hypotheses",
    "predicted_width_exponent",
    "problem_to_dict",
    "problem_from_dict",
    "load_problem",
    "BallSpec",
    "IntersectionSpec",
    "WidthEstimate",
    "SearchConfig",
    "exact_width",
    "gluskin_order",
    "interpolation_ball",
    "ring_radii",
    "ring_level_body",
    "intersection_width_upper",
    "sample_extreme_points",
    "lq_distances",
    "numeric_width_profile",
    "numeric_width_upper",
    "brute_force_width_oracle",
    "DomainSpec",
    "QuadratureSpec",
    "Cell",
    "EnsembleMember",
    "ExperimentRow",
    "CriticalScales",
    "RankAllocation",
    "Approximant",
    "ErrorBreakdown",
    "domain_for_problem",
    "default_quadrature",
    "ring_segments",
    "ring_piece_count",
    "ring_cells",
    "build_partition",
    "refinement_children",
    "weight_functions",
    "weighted_norm",
    "target_norm",
    "check_membership",
    "l2_project",
    "project_eval",
    "critical_scales",
    "default_eps",
    "rank_allocation",
    "approximate",
    "approximation_error",
    "run_experiment",
    "BOUND_LABELS",
    "BumpSpec",
    "BumpFamily",
    "MatchedDepths",
    "LowerBoundCurve",
    "build_bump_family",
    "bump_norms",
    "ring_scaled_norms",
    "log2_slope",
    "matched_depths",
    "lower_bound_curve",
    "membership_ensemble",
    "substream",
]
