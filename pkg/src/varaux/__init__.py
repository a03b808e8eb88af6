"""Design-based estimation of a finite-population variance with two
auxiliary variables.

The package covers the full workflow: moment computation
(:mod:`varaux.moments`), point estimation with exponential
ratio/product/combined estimators in single-phase and two-phase designs
(:mod:`varaux.estimators`), corrected first-order bias/MSE/efficiency
theory (:mod:`varaux.theory`), a deterministic replicated-sampling
engine (:mod:`varaux.montecarlo`), and synthetic population generation
(:mod:`varaux.popgen`).  The ``varaux`` command exposes all of it.
"""

from .errors import (
    DegeneratePopulationError,
    DegenerateSampleError,
    InvalidDesignError,
    InvalidInputError,
    InvalidSpecError,
    NoUniqueOptimumError,
    PopulationFormatError,
    SimulationError,
    VarauxError,
)
from .estimators import (
    COMBINED,
    COMBINED_TWO_PHASE,
    EXP_PRODUCT,
    EXP_PRODUCT_TWO_PHASE,
    EXP_RATIO,
    EXP_RATIO_TWO_PHASE,
    ISAKI_RATIO,
    SINGLE_PHASE_KINDS,
    TWO_PHASE_KINDS,
    UNBIASED,
    AuxKnowledge,
    EstimatorKind,
    Family,
    TwoPhaseDraw,
    alpha_opt,
    estimate_single_phase,
    estimate_two_phase,
    estimate_two_phase_from_draw,
    k_opt,
    single_phase_value,
    two_phase_value,
)
from .moments import (
    MAX_MOMENT_ORDER,
    DeltaTable,
    Population,
    central_moment,
    delta,
    delta_table,
    load_delta_table,
    load_population_csv,
    sample_variance,
    save_delta_table,
    save_population_csv,
)
from .montecarlo import (
    CHUNK_SIZE,
    EstimatorSummary,
    SimulationConfig,
    SimulationReport,
    WeightPolicy,
    draw_srswor,
    draw_two_phase,
    run_simulation,
)
from .popgen import (
    Marginal,
    PopulationSpec,
    generate_population,
    load_population,
    load_population_spec,
    realized_correlations,
    save_population,
)
from .theory import (
    BUILTIN_EXAMPLE_DELTAS,
    BUILTIN_EXAMPLE_DESIGN,
    BUILTIN_EXAMPLE_NOTES,
    BUILTIN_EXAMPLE_POPULATION_SIZE,
    CORRECTIONS,
    Correction,
    DesignSizes,
    REPORTED_PRE_SINGLE_PHASE,
    REPORTED_PRE_TWO_PHASE,
    TheoryResult,
    bias_single_phase,
    combined_curvature,
    corrections_by_id,
    min_mse_combined,
    mse_single_phase,
    mse_two_phase,
    pre,
    theory_for_kind,
    var_unbiased_theory,
)

__version__ = "0.1.0"

__all__ = [
    "AuxKnowledge",
    "BUILTIN_EXAMPLE_DELTAS",
    "BUILTIN_EXAMPLE_DESIGN",
    "BUILTIN_EXAMPLE_NOTES",
    "BUILTIN_EXAMPLE_POPULATION_SIZE",
    "CHUNK_SIZE",
    "COMBINED",
    "COMBINED_TWO_PHASE",
    "CORRECTIONS",
    "Correction",
    "DegeneratePopulationError",
    "DegenerateSampleError",
    "DeltaTable",
    "DesignSizes",
    "EXP_PRODUCT",
    "EXP_PRODUCT_TWO_PHASE",
    "EXP_RATIO",
    "EXP_RATIO_TWO_PHASE",
    "EstimatorKind",
    "EstimatorSummary",
    "Family",
    "ISAKI_RATIO",
    "InvalidDesignError",
    "InvalidInputError",
    "InvalidSpecError",
    "MAX_MOMENT_ORDER",
    "Marginal",
    "NoUniqueOptimumError",
    "Population",
    "PopulationFormatError",
    "PopulationSpec",
    "REPORTED_PRE_SINGLE_PHASE",
    "REPORTED_PRE_TWO_PHASE",
    "SINGLE_PHASE_KINDS",
    "SimulationConfig",
    "SimulationError",
    "SimulationReport",
    "TWO_PHASE_KINDS",
    "TheoryResult",
    "TwoPhaseDraw",
    "UNBIASED",
    "VarauxError",
    "WeightPolicy",
    "alpha_opt",
    "bias_single_phase",
    "central_moment",
    "combined_curvature",
    "corrections_by_id",
    "delta",
    "delta_table",
    "draw_srswor",
    "draw_two_phase",
    "estimate_single_phase",
    "estimate_two_phase",
    "estimate_two_phase_from_draw",
    "generate_population",
    "k_opt",
    "load_delta_table",
    "load_population",
    "load_population_csv",
    "load_population_spec",
    "min_mse_combined",
    "mse_single_phase",
    "mse_two_phase",
    "pre",
    "realized_correlations",
    "run_simulation",
    "sample_variance",
    "save_delta_table",
    "save_population",
    "save_population_csv",
    "single_phase_value",
    "theory_for_kind",
    "two_phase_value",
    "var_unbiased_theory",
]
