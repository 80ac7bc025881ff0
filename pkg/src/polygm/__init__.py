"""Parameter and structure estimation for polynomial exponential-family
graphical models on continuous, unbounded variables.

The package fits one local energy per node, either by the screening
objective (a reweighted exponential moment whose population gradient
vanishes at the true parameters) or by pseudo-likelihood, then symmetrizes
the per-node estimates into a single model and thresholds for structure.
"""

from .errors import (
    DimensionError,
    IntegrabilityError,
    NonSymmetricMatrixError,
    NotPositiveDefiniteError,
    ObjectiveOverflowError,
    QuadratureAccuracyError,
)
from .model import (
    CandidateBasis,
    EnergyModel,
    LocalView,
    MultiIndex,
    eval_energy,
    eval_local_energy,
    eval_monomial,
    gaussian_model,
    load_model,
    model_from_dict,
    model_to_dict,
    monomial_matrix,
    precision_from_model,
    save_model,
)
from .mrd import (
    CenteredLocalEnergy,
    CenteredTerm,
    MRDParams,
    center_term,
    centered_local_energy,
    centered_monomial_matrix,
    centering_coefficient,
    eval_centered_energy,
    moment_finiteness_matrix,
    mrd_density,
)
from .objectives import (
    IsodusObjective,
    PLObjective,
    QuadratureConfig,
    isodus_objective,
    l1_coefficient,
    local_partition,
    pl_objective,
    regularized_objective,
)
from .quadrature import exp_poly_moments, integrate, integrate_real_line
from .recovery import (
    FitResult,
    NStarConfig,
    NStarLevel,
    NStarResult,
    SymmetrizedEstimate,
    fit_model,
    max_abs_error,
    mean_abs_error,
    nstar_search,
    symmetrize,
    threshold_structure,
)
from .sampling import (
    SampleSet,
    build_grid,
    load_samples,
    random_polynomial_1d,
    random_psd_precision,
    random_regular_ggm,
    sample_gaussian,
    sample_grid,
    sample_product,
    save_samples,
)
from .solver import (
    SolveConfig,
    SolveResult,
    fit_node,
    minimize,
    minimum_norm_subgradient,
    optimality_certificate,
    pl_start,
)
from .fixtures import (
    diamond_covariance,
    diamond_model,
    draw_samples,
    fourbody2d,
    independent_blocks,
    make_sampler,
    model_from_spec,
    pseudo4d,
    quartic1d,
)

__version__ = "0.1.0"

__all__ = [
    "CandidateBasis",
    "CenteredLocalEnergy",
    "CenteredTerm",
    "DimensionError",
    "EnergyModel",
    "FitResult",
    "IntegrabilityError",
    "IsodusObjective",
    "LocalView",
    "MRDParams",
    "MultiIndex",
    "NStarConfig",
    "NStarLevel",
    "NStarResult",
    "NonSymmetricMatrixError",
    "NotPositiveDefiniteError",
    "ObjectiveOverflowError",
    "PLObjective",
    "QuadratureAccuracyError",
    "QuadratureConfig",
    "SampleSet",
    "SolveConfig",
    "SolveResult",
    "SymmetrizedEstimate",
    "build_grid",
    "center_term",
    "centered_local_energy",
    "centered_monomial_matrix",
    "centering_coefficient",
    "diamond_covariance",
    "diamond_model",
    "draw_samples",
    "eval_centered_energy",
    "eval_energy",
    "eval_local_energy",
    "eval_monomial",
    "exp_poly_moments",
    "fit_model",
    "fit_node",
    "fourbody2d",
    "gaussian_model",
    "independent_blocks",
    "integrate",
    "integrate_real_line",
    "isodus_objective",
    "l1_coefficient",
    "load_model",
    "load_samples",
    "local_partition",
    "make_sampler",
    "max_abs_error",
    "mean_abs_error",
    "minimize",
    "minimum_norm_subgradient",
    "model_from_dict",
    "model_from_spec",
    "model_to_dict",
    "moment_finiteness_matrix",
    "monomial_matrix",
    "mrd_density",
    "nstar_search",
    "optimality_certificate",
    "pl_objective",
    "pl_start",
    "precision_from_model",
    "pseudo4d",
    "quartic1d",
    "random_polynomial_1d",
    "random_psd_precision",
    "random_regular_ggm",
    "regularized_objective",
    "sample_gaussian",
    "sample_grid",
    "sample_product",
    "save_model",
    "save_samples",
    "symmetrize",
    "threshold_structure",
]
