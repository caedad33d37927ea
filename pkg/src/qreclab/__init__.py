"""qreclab: a numerical laboratory for repeatable quantum records.

Builds the controlled tagging unitaries that copy which-subspace information
onto apparatus systems, verifies the exact identities that force repeatable
records onto orthogonal subspaces, adversarially searches the unitary group
for counterexamples, and constructs the sequential-measurement POVM.
"""

from .hilbert import (
    TOL_ALG,
    CompositeDims,
    DensityOperator,
    SchmidtDecomposition,
    StateVector,
    UnitaryOperator,
    basis_state,
    hs_inner,
    partial_trace,
    pure_density,
    purify,
    random_density,
    random_unitary,
    schmidt_decompose,
    support_overlap,
    tensor_product,
)
from .copy_dynamics import (
    ChainResult,
    CopyChain,
    RecordDecomposition,
    TagSpec,
    build_controlled_copy,
    extract_record,
    record_overlap,
    run_copy_chain,
    run_mixed_copy,
)
from .optimizer import (
    Constraint,
    OptimizationConfig,
    SearchResult,
    UnitaryParameterization,
    exp_unitary,
    log_unitary,
    maximize,
    sweep_overlap_frontier,
)
from .povm import (
    PovmElement,
    SequentialMeasurement,
    build_sequential_povm,
    check_povm,
    monitoring_preset,
    outcome_probabilities,
)
from .theorems import (
    THR_ACTION,
    TOL_OPT,
    TOL_PROD,
    ActionabilityVerdict,
    IdentityReport,
    RepeatabilityError,
    actionability_test,
    bell_phase_demo,
    mixtures_dont_mix_check,
    purified_orthogonality,
    tag_distinguishability_search,
    verify_record_orthogonality,
    verify_scalar_product_identity,
)

__version__ = "0.1.0"
