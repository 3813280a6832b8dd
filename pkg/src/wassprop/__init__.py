"""Wasserstein soft-label propagation on graphs and hypergraphs.

Distributional vertex labels (quantile functions or diagonal Gaussians),
exact one-dimensional transport calculus, a closed-form graph regularization
solver with maximum-principle guarantees, alternating barycenter propagation
on hypergraphs, computable stability and generalization bounds, and a seeded
experiment harness.
"""

from .errors import (
    DimensionError,
    HypothesisError,
    InputError,
    NormalizationError,
    NumericalError,
    StructureError,
    WasspropError,
)
from .experiments import (
    AnchorSpec,
    CategoricalTable,
    ExperimentResult,
    IngestResult,
    SbmConfig,
    SbmCounts,
    SbmSample,
    emit_metrics,
    expected_sbm_counts,
    gen_sbm,
    ingest_categorical,
    run_experiment,
    stratified_subsample,
)
from .hypergraph import (
    Hypergraph,
    LaplacianView,
    WeightedGraph,
    clique_expand,
    is_connected,
    laplacian,
    spectral_gap,
)
from .labels import (
    DEFAULT_GRID_SIZE,
    DiagGaussianLabel,
    DominatedQuantileEnvelope,
    QuantileGrid,
    QuantileLabel,
    barycenter_energy,
    barycenter_gaussian,
    barycenter_quantile,
    check_dominated,
    gaussian_quantile_label,
    quantile_from_histogram,
    tight_envelope,
    w2_squared_gaussian,
    w2_squared_quantile,
)
from .propagation import (
    GaussianBackend,
    LabeledSubset,
    PropagationConfig,
    PropagationState,
    QuantileBackend,
    classify,
    evaluate_loss,
    init_weights,
    initial_state,
    propagate,
    step,
)
from .stability import (
    BoundReport,
    EmpiricalStabilityReport,
    StabilityInputs,
    SwapTrial,
    beta,
    bounds_from_beta,
    empirical_stability,
    generalization_bounds,
    slice_shift_coefficient,
)
from .tikhonov import (
    MaxPrincipleReport,
    QuantileField,
    SliceSystem,
    TikhonovOperator,
    TrainingSet,
    assemble_system,
    check_apriori,
    check_maximum_principle,
    invertibility_margin,
    solve_field,
    solve_slice,
)

__version__ = "0.1.0"

__all__ = [
    "AnchorSpec",
    "BoundReport",
    "CategoricalTable",
    "DEFAULT_GRID_SIZE",
    "DiagGaussianLabel",
    "DimensionError",
    "DominatedQuantileEnvelope",
    "EmpiricalStabilityReport",
    "ExperimentResult",
    "GaussianBackend",
    "Hypergraph",
    "HypothesisError",
    "IngestResult",
    "InputError",
    "LabeledSubset",
    "LaplacianView",
    "MaxPrincipleReport",
    "NormalizationError",
    "NumericalError",
    "PropagationConfig",
    "PropagationState",
    "QuantileBackend",
    "QuantileField",
    "QuantileGrid",
    "QuantileLabel",
    "SbmConfig",
    "SbmCounts",
    "SbmSample",
    "SliceSystem",
    "StabilityInputs",
    "StructureError",
    "SwapTrial",
    "TikhonovOperator",
    "TrainingSet",
    "WasspropError",
    "WeightedGraph",
    "barycenter_energy",
    "barycenter_gaussian",
    "barycenter_quantile",
    "beta",
    "bounds_from_beta",
    "check_apriori",
    "check_dominated",
    "check_maximum_principle",
    "classify",
    "clique_expand",
    "emit_metrics",
    "empirical_stability",
    "evaluate_loss",
    "expected_sbm_counts",
    "gaussian_quantile_label",
    "gen_sbm",
    "generalization_bounds",
    "ingest_categorical",
    "init_weights",
    "initial_state",
    "invertibility_margin",
    "is_connected",
    "laplacian",
    "propagate",
    "quantile_from_histogram",
    "run_experiment",
    "slice_shift_coefficient",
    "solve_field",
    "solve_slice",
    "assemble_system",
    "spectral_gap",
    "step",
    "stratified_subsample",
    "tight_envelope",
    "w2_squared_gaussian",
    "w2_squared_quantile",
]
