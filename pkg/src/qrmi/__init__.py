"""Renyi mutual information and composite quantum hypothesis testing."""

from .divergences import (
    AlphaParam,
    DivergenceKind,
    divergence,
    pinch,
    rel_entropy_and_variance,
    spectrum_count,
)
from .mutual_info import (
    HypothesisInstance,
    MIResult,
    SolveMethod,
    SpecializeKind,
    direct_minimization,
    dual_instance,
    dual_mi,
    mi_variance,
    petz_mi,
    product_instance,
    sandwiched_fp_map,
    sandwiched_mi,
    sibson_minimizer,
    specialize,
)
from .operators import (
    BipartiteState,
    DensityMatrix,
    HermitianOperator,
    Spectrum,
    identity,
    mat_func,
    mat_log,
    mat_power,
    maximally_mixed,
    operator_from_json,
    operator_to_json,
    partial_trace,
    permute_factors,
    purify,
    support_projector,
    symmetrize,
    tensor,
    threshold_projector,
    trace_distance,
)
from .universal import (
    UniversalState,
    block_count,
    domination_gap,
    sym_dim,
    symmetric_projector_marginal,
    universal_state,
)

__all__ = [name for name in dir() if not name.startswith("_")]

__version__ = "0.1.0"
