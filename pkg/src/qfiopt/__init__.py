"""qfiopt: quantum Fisher information and metrological-gain optimization
over local Hamiltonians, with semidefinite relaxations and PPT-constrained
norm maximization."""

from .errors import (
    InfeasibleError,
    NumericalError,
    QfioptError,
    UninformativeMeasurementError,
    ValidationError,
)
from .linalg import (
    BipartiteDims,
    SpectralData,
    hadamard,
    hermitian_eig,
    hermitize,
    hs_norm,
    kron,
    partial_trace,
    partial_transpose,
    permute_subsystems,
    realign,
    realign_adjoint,
    reorder_to_bipartition,
    trace_norm,
)
from .metrology import (
    DensityMatrix,
    GainReport,
    LocalHamiltonian,
    delta_seminorm,
    error_propagation_variance,
    fisher_matrix,
    fq_sep,
    gain_for,
    q_matrix,
    qfi,
    qfi_two,
    sld,
    wy_coefficient_matrix,
    wy_skew,
)
from .optimizers import (
    SeesawConfig,
    SeesawResult,
    ccnr_max_ppt,
    gain_global,
    power_iteration,
    purity_seesaw,
    random_hermitian,
    seesaw_qfi_aux,
    seesaw_qfi_local,
    seesaw_qfi_state,
    seesaw_step_local,
    seesaw_wy_local,
)
from .sdp import (
    Block,
    ComplexEmbedding,
    ConicProgram,
    ConicSolution,
    ProgramBuilder,
    dump_program,
    embed_complex_psd,
    linear_over_ppt,
    linear_over_states,
    shor_level1,
    solve,
)
from .states import (
    CoherenceVector,
    SpecialSeparableDecomposition,
    bell_kets,
    builtin_state,
    ccnr_bes_4x4,
    coherence_vector,
    gell_mann_basis,
    horodecki_3x3,
    isotropic,
    load_operator,
    load_state,
    save_operator,
    save_state,
    special_separable_compose,
    special_separable_membership,
    upb_tiles_3x3,
)

__version__ = "0.1.0"
