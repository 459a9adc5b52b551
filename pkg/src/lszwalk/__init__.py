"""Szegedy walk unitaries for detailed-balanced Lindbladians and Davies generators."""

from .davies import (
    BohrGrid,
    DaviesInstance,
    bohr_grid,
    commutant_dimension,
    davies_instance,
    davies_lindbladian,
    filter_eval,
    gibbs_state,
    jump_operators,
)
from .discriminant import Discriminant, discriminant_matrix, purified_fixed_point, verify_similarity
from .energy import (
    RoundedHamiltonian,
    RoundingPromise,
    bohr_estimation_unitary,
    check_rounding_promise,
    ideal_estimation_unitary,
    purification_overlap,
    query_cost_estimate,
    rounded_hamiltonian,
)
from .lindblad import (
    CanonicalLindbladian,
    CanonicalTerm,
    Lindbladian,
    QuantumChannel,
    apply_heisenberg,
    apply_schrodinger,
    canonical_term,
    channel_to_lindbladian,
    check_canonical,
    check_detailed_balance,
    fixed_point_residual,
    lindblad_matrix,
    spectral_gap,
    to_lindbladian,
)
from .matrix_core import SpectralDecomposition, eig_hermitian, kron, matfunc, unvec, vec
from .reduction import (
    ReflectionBlockEncoding,
    assemble_X,
    extended_jump_operators,
    projector_lambda,
    reduce_to_davies,
    reflection_block_encoding,
)
from .superop import (
    GNS,
    KMS,
    PINNED_WEIGHTS,
    ReferenceState,
    WeightFunction,
    inner_f,
    modular_apply,
    omega_f_apply,
    reference_state,
)
from .walk import (
    RegisterLayout,
    WalkEmbedding,
    build_isometry_single,
    build_walk_unitary,
    combine_couplings,
    gap_amplification_check,
    walk_spectrum,
)

__version__ = "0.1.0"
