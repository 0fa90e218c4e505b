"""Fisher information for parametric multi-object observation models.

The library represents one-parameter families of observations, scores them
through the derivative of their densities or atom masses, and measures how
much information survives observation channels that forget structure:
random shuffling of coordinates, independent thinning of points, and
superposition with clutter.  Every quantity has at least two independent
routes (closed form, exact enumeration, Monte Carlo) so the results check
each other.
"""

from .errors import (
    EnumerationLimitError,
    FisherppError,
    NotDuplicatedError,
    NumericError,
    SupportMismatchError,
    TruncationError,
    ValidationError,
)
from .measures import (
    AtomicFamily,
    ContinuousFamily,
    ParamValue,
    ScoreValue,
    expectation,
    product_score,
    score_atomic,
    score_continuous,
    weak_derivative_residual,
)
from .pointproc import (
    CardinalityPMF,
    Configuration,
    IIDPointProcess,
    MomentSummary,
    dedup,
    duplicate,
    enumerate_iid_outcomes,
    from_text,
    moments,
    sample_iid_pp,
    score_duplicated,
    score_iid_pp,
    to_text,
)
from .kernels import (
    ClutterSpec,
    CompositeKernel,
    EnumerableJointModel,
    PermutationKernel,
    ThinningKernel,
    apply_kernel,
    apply_permutation,
    apply_thinning,
    conditional_score_oracle,
    marginal_score_composite,
    marginal_score_permuted,
    marginal_score_superposed,
    marginal_score_thinned_iid,
    permuted_log_density,
    second_moment_thinned,
    thinned_cardinality,
    thinned_process,
)
from .fisher import (
    AtomicModel,
    CompositeProcessModel,
    DuplicatedProcessModel,
    FisherEstimate,
    HierarchicalModel,
    IIDProcessModel,
    LossReport,
    SuperposedProcessModel,
    ThinnedProcessModel,
    adjudicate_coefficient_mode,
    additivity_residual,
    cardinality_information,
    consistency_residual,
    fisher_enumerate,
    fisher_iid_analytic,
    fisher_mc,
    fisher_quadrature,
    loss_report,
    mean_score_enumerated,
    relative_thinning_loss,
    spatial_information,
)
from .models import (
    bernoulli_cardinality,
    bernoulli_dirac,
    fixed_cardinality,
    fixed_clutter,
    gaussian_location,
    gaussian_pair,
    gaussian_pair_iid,
    gaussian_scale,
    mixture_cardinality,
    poisson_cardinality,
    poisson_clutter,
    two_point_family,
    uniform_atoms,
)
from .checks import CheckResult, run_suite
from .report import CSV_HEADER, ResultRow

__version__ = "0.1.0"

__all__ = [
    "AtomicFamily",
    "AtomicModel",
    "CSV_HEADER",
    "CardinalityPMF",
    "CheckResult",
    "ClutterSpec",
    "CompositeKernel",
    "CompositeProcessModel",
    "Configuration",
    "ContinuousFamily",
    "DuplicatedProcessModel",
    "EnumerableJointModel",
    "EnumerationLimitError",
    "FisherEstimate",
    "FisherppError",
    "HierarchicalModel",
    "IIDPointProcess",
    "IIDProcessModel",
    "LossReport",
    "MomentSummary",
    "NotDuplicatedError",
    "NumericError",
    "ParamValue",
    "PermutationKernel",
    "ResultRow",
    "ScoreValue",
    "SuperposedProcessModel",
    "SupportMismatchError",
    "ThinnedProcessModel",
    "ThinningKernel",
    "TruncationError",
    "ValidationError",
    "adjudicate_coefficient_mode",
    "additivity_residual",
    "apply_kernel",
    "apply_permutation",
    "apply_thinning",
    "bernoulli_cardinality",
    "bernoulli_dirac",
    "cardinality_information",
    "conditional_score_oracle",
    "consistency_residual",
    "dedup",
    "duplicate",
    "enumerate_iid_outcomes",
    "expectation",
    "fisher_enumerate",
    "fisher_iid_analytic",
    "fisher_mc",
    "fisher_quadrature",
    "fixed_cardinality",
    "fixed_clutter",
    "from_text",
    "gaussian_location",
    "gaussian_pair",
    "gaussian_pair_iid",
    "gaussian_scale",
    "loss_report",
    "marginal_score_composite",
    "marginal_score_permuted",
    "marginal_score_superposed",
    "marginal_score_thinned_iid",
    "mean_score_enumerated",
    "mixture_cardinality",
    "moments",
    "permuted_log_density",
    "poisson_cardinality",
    "poisson_clutter",
    "product_score",
    "relative_thinning_loss",
    "run_suite",
    "sample_iid_pp",
    "score_atomic",
    "score_continuous",
    "score_duplicated",
    "score_iid_pp",
    "second_moment_thinned",
    "spatial_information",
    "thinned_cardinality",
    "thinned_process",
    "to_text",
    "two_point_family",
    "uniform_atoms",
    "weak_derivative_residual",
    "__version__",
]
