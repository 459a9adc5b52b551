"""Embedding general detailed-balanced generators as reflection-coupled walks.

A canonical term whose jumps X(theta) sit in distinct modular eigenspaces
assembles into one hermitian matrix X = sum_theta X(theta), recoverable
through the eigenspace projectors Lambda_theta.  When |X| <= 1 it admits a
reflection dilation S on one ancilla qubit with X as its upper-left block.
Splitting S along the ancilla-zero projector yields micro jump operators
S(c, theta) labelled by extended Bohr frequencies (c, theta), c in {0,1,2},
which are complete and closed under the negation (c, theta) -> (c, -theta).
Giving the c = 0 family the original rates and the others rate zero turns
the generator into a reflection-coupled one on the enlarged space: with
the ancillas held at zero, its walk encodes exactly the original
discriminant, with the same amplified phase gap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .davies import BohrGrid, reference_bohr_grid
from .discriminant import Discriminant, discriminant_matrix, khat_from_jump_family, purified_fixed_point
from .lindblad import CanonicalLindbladian, CanonicalTerm
from .matrix_core import dagger, eig_hermitian, hermiticity_defect, kron, matfunc, require_hermitian
from .superop import ReferenceState
from .walk import (
    RegisterLayout,
    WalkEmbedding,
    build_reflection_tail,
    combine_couplings,
    gap_amplification_check,
    isometry_from_jump_family,
    walk_spectrum,
)

__all__ = [
    "ReductionDomainError",
    "ReflectionBlockEncoding",
    "ReducedEmbedding",
    "ReductionReport",
    "assemble_X",
    "projector_lambda",
    "reflection_block_encoding",
    "extended_jump_operators",
    "reduce_to_davies",
]


class ReductionDomainError(ValueError):
    """The generator is outside the reduction's domain (by structure or norm)."""


@dataclass(frozen=True)
class ReflectionBlockEncoding:
    """Reflection S on ancilla (x) system with X as its |0..0> block."""

    x: np.ndarray
    s: int
    reflection: np.ndarray

    @property
    def system_dim(self) -> int:
        return self.x.shape[0]

    @property
    def ancilla_dim(self) -> int:
        return 2**self.s

    def block_defect(self) -> float:
        """Spectral norm of the recovered block minus X."""
        d = self.system_dim
        recovered = self.reflection[:d, :d]
        return float(np.linalg.norm(recovered - self.x, 2))


def assemble_X(term: CanonicalTerm) -> np.ndarray:
    """Sum the term's jumps into one hermitian matrix.

    Hermiticity follows from the adjoint pairing of the jumps.  A norm
    above 1 leaves no reflection dilation; rescale the generator first.
    """
    x = np.zeros_like(term.jumps[0])
    for op in term.jumps:
        x += op
    defect = hermiticity_defect(x)
    if defect > 1e-10 * max(1.0, float(np.linalg.norm(x, 2))):
        raise ValueError(f"assembled coupling is not hermitian: defect {defect:.3e}")
    norm = float(np.linalg.norm(x, 2))
    if norm > 1.0 + 1e-10:
        raise ReductionDomainError(
            f"assembled coupling has norm {norm:.6f} > 1; rescale the generator before encoding"
        )
    return (x + dagger(x)) / 2.0


def projector_lambda(ref: ReferenceState, theta: float, a: np.ndarray) -> np.ndarray:
    """Project onto the modular eigenspace at e^{-theta}.

    ``theta`` must lie on the Bohr grid of h = -ln(sigma); the family over
    all grid values resolves the identity and diagonalizes the modular
    operator.
    """
    grid = reference_bohr_grid(ref)
    idx = grid.index_of(theta)
    a = np.asarray(a, dtype=complex)
    projs = ref.decomposition.projectors
    out = np.zeros_like(a)
    for k, l in grid.index_sets[idx]:
        out += projs[k] @ a @ projs[l]
    return out


def reflection_block_encoding(x: np.ndarray) -> ReflectionBlockEncoding:
    """One-ancilla hermitian dilation S = [[X, C], [C, -X]], C = sqrt(I - X^2).

    Requires X hermitian with norm at most 1; S is then a reflection
    because C commutes with X.
    """
    x = require_hermitian(np.asarray(x, dtype=complex), what="block-encoded matrix")
    norm = float(np.linalg.norm(x, 2))
    if norm > 1.0 + 1e-10:
        raise ValueError(f"cannot block-encode norm {norm:.6f} > 1 into a reflection")
    dec = eig_hermitian(x, grouping_tolerance=1e-12)
    complement = matfunc(dec, lambda t: np.sqrt(max(0.0, 1.0 - t * t)))
    d = x.shape[0]
    s_matrix = np.zeros((2 * d, 2 * d), dtype=complex)
    s_matrix[:d, :d] = x
    s_matrix[:d, d:] = complement
    s_matrix[d:, :d] = complement
    s_matrix[d:, d:] = -x
    enc = ReflectionBlockEncoding(x=x, s=1, reflection=s_matrix)
    involution = float(np.linalg.norm(s_matrix @ s_matrix - np.eye(2 * d), 2))
    if involution > 1e-10:
        raise ValueError(f"dilation failed to square to identity: {involution:.3e}")
    return enc


def extended_jump_operators(
    enc: ReflectionBlockEncoding, ref: ReferenceState
) -> dict[tuple[int, float], np.ndarray]:
    """Micro jump operators S(c, theta) on ancilla (x) system.

    The macro jump S(theta) projects the reflection between modular
    eigenspaces of the system factor; the block index c in {0, 1, 2} splits
    it along the ancilla-zero projector (diagonal-zero, off-diagonal,
    diagonal-rest).  The family satisfies S(c, -theta) = S(c, theta)^dag and
    sums to the identity in the completeness sense.
    """
    grid = reference_bohr_grid(ref)
    projs = ref.decomposition.projectors
    a = enc.ancilla_dim
    d = enc.system_dim
    eye_anc = np.eye(a)
    p0 = np.zeros((a, a))
    p0[0, 0] = 1.0
    p1 = np.eye(a) - p0
    anc0 = kron(p0, np.eye(d))
    anc1 = kron(p1, np.eye(d))

    out: dict[tuple[int, float], np.ndarray] = {}
    for theta, pairs in zip(grid.frequencies, grid.index_sets):
        macro = np.zeros_like(enc.reflection)
        for k, l in pairs:
            macro += kron(eye_anc, projs[k]) @ enc.reflection @ kron(eye_anc, projs[l])
        out[(0, float(theta))] = anc0 @ macro @ anc0
        out[(1, float(theta))] = anc0 @ macro @ anc1 + anc1 @ macro @ anc0
        out[(2, float(theta))] = anc1 @ macro @ anc1
    return out


def extended_completeness_defect(
    micro: dict[tuple[int, float], np.ndarray]
) -> float:
    """Spectral norm of sum S(c,theta)^dag S(c,theta) - I."""
    ops = list(micro.values())
    dim = ops[0].shape[0]
    acc = np.zeros((dim, dim), dtype=complex)
    for op in ops:
        acc += dagger(op) @ op
    return float(np.linalg.norm(acc - np.eye(dim), 2))


@dataclass
class ReducedEmbedding:
    """Walk data of the reduction: per-term encodings and the restricted isometry.

    ``embedding`` maps the original d^2-dimensional vectorization space into
    the enlarged walk space, i.e. the full isometry with both ancilla
    registers pinned to zero, so its encoded matrix is the original
    discriminant itself.
    """

    encodings: tuple[ReflectionBlockEncoding, ...]
    grid: BohrGrid
    layout: RegisterLayout
    embedding: WalkEmbedding
    full_isometry: np.ndarray


@dataclass
class ReductionReport:
    q_match_residual: float
    completeness_residual: float
    block_recovery_residual: float
    c12_contribution_residual: float
    phase_match_residual: float
    phase_gap_direct: float
    phase_gap_reduced: float
    fixed_point_residual: float
    enlarged_system_dim: int
    walk_space_dim: int


def reduce_to_davies(cl: CanonicalLindbladian) -> tuple[ReducedEmbedding, ReductionReport]:
    """Rewrite a canonical generator as a reflection-coupled walk and verify it.

    Each term must carry at most one jump per Bohr frequency (so the
    assembled coupling recovers the jumps through Lambda_theta) with rates
    at most 1 and assembled norm at most 1.
    """
    direct = discriminant_matrix(cl)
    ref = cl.reference
    grid = reference_bohr_grid(ref)
    d = ref.dim
    n_theta = grid.size

    labels = tuple((c, float(theta)) for c in range(3) for theta in grid.frequencies)
    negation = tuple(c * n_theta + (n_theta - 1 - i) for c in range(3) for i in range(n_theta))
    layout = RegisterLayout(
        sys2_dim=2 * d,
        sys1_dim=2 * d,
        freq_labels=labels,
        negation=negation,
        block_dim=3,
        anc_dim=2,
    )
    tail = build_reflection_tail(layout)

    encodings = []
    parts = []
    weights = []
    completeness = 0.0
    recovery = 0.0
    for term in cl.terms:
        jump_by_freq: dict[int, tuple[np.ndarray, float]] = {}
        for omega, x_omega, g, _ in term.entries():
            idx = grid.index_of(omega)
            if idx in jump_by_freq:
                raise ReductionDomainError(
                    "term carries several jumps at one Bohr frequency; "
                    "the reduction needs one jump per frequency"
                )
            jump_by_freq[idx] = (x_omega, g)

        x = assemble_X(term)
        for idx, (x_omega, _) in jump_by_freq.items():
            recovered = projector_lambda(ref, float(grid.frequencies[idx]), x)
            recovery = max(recovery, float(np.linalg.norm(recovered - x_omega, 2)))
        enc = reflection_block_encoding(x)
        encodings.append(enc)
        micro = extended_jump_operators(enc, ref)
        completeness = max(completeness, extended_completeness_defect(micro))

        ops = []
        rates = []
        for c, theta in labels:
            ops.append(micro[(c, theta)])
            if c == 0:
                idx = grid.index_of(theta)
                rates.append(jump_by_freq[idx][1] if idx in jump_by_freq else 0.0)
            else:
                rates.append(0.0)

        isometry = isometry_from_jump_family(ops, rates, layout)
        part = WalkEmbedding(
            isometry=isometry, tail_reflection=tail, identity_dim=(2 * d) ** 2, layout=layout
        )
        parts.append(part)
        weights.append(term.weight)

    combined = parts[0] if len(parts) == 1 else combine_couplings(parts, weights, mode="state-prep")
    combined.validate()

    # Pin both ancilla registers to |0>; the columns then span the original
    # vectorization space inside the enlarged one.
    e0 = np.zeros((2, 1))
    e0[0, 0] = 1.0
    embed_one = kron(e0, np.eye(d))
    iota = kron(embed_one, embed_one)
    restricted = WalkEmbedding(
        isometry=combined.isometry @ iota,
        tail_reflection=combined.tail_reflection,
        identity_dim=combined.identity_dim,
        layout=combined.layout,
        encoding_scale=combined.encoding_scale,
    )

    q_match = float(np.linalg.norm(restricted.encoded_matrix() - direct.q, 2))

    # With vanishing rates the c = 1, 2 sectors drop out of the encoded
    # matrix; the weighted c = 0 entries alone must reproduce it.
    enlarged_entries = []
    for term, enc in zip(cl.terms, encodings):
        micro = extended_jump_operators(enc, ref)
        for omega, _, g, partner in term.entries():
            idx = grid.index_of(omega)
            g_neg = float(term.rates[partner])
            enlarged_entries.append((term.weight, micro[(0, float(grid.frequencies[idx]))], g, g_neg))
    khat_c0 = khat_from_jump_family(enlarged_entries, 2 * d)
    encoded_full = combined.encoded_matrix()
    c12_residual = float(np.linalg.norm(encoded_full - (np.eye((2 * d) ** 2) + khat_c0), 2))

    spectrum = walk_spectrum(restricted, direct.q)
    gaps = gap_amplification_check(direct.q)
    positive = spectrum.phases_b[spectrum.phases_b > 1e-8]
    phase_gap_reduced = float(np.min(positive)) if positive.size else 0.0

    fixed = iota @ purified_fixed_point(ref)
    chi = combined.isometry @ fixed
    fixed_residual = float(np.linalg.norm(combined.apply_W(chi) - chi))

    block_recovery = max(enc.block_defect() for enc in encodings)

    reduced = ReducedEmbedding(
        encodings=tuple(encodings),
        grid=grid,
        layout=combined.layout,
        embedding=restricted,
        full_isometry=combined.isometry,
    )
    report = ReductionReport(
        q_match_residual=q_match,
        completeness_residual=completeness,
        block_recovery_residual=max(block_recovery, recovery),
        c12_contribution_residual=c12_residual,
        phase_match_residual=spectrum.phase_match_residual,
        phase_gap_direct=gaps.theta,
        phase_gap_reduced=phase_gap_reduced,
        fixed_point_residual=fixed_residual,
        enlarged_system_dim=2 * d,
        walk_space_dim=restricted.total_dim,
    )
    return reduced, report
