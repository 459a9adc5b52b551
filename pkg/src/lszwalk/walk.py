"""Isometries, reflections and the Szegedy walk unitary.

The walk space is sys2 (x) sys1 (x) freq (x) filter (x) add, optionally
extended by a coupling register and one extra qubit.  For a single
reflection coupling the isometry is

    T = 1/sqrt(2) sum_omega [ S(omega) (x) I (x) |omega> (x) g_omega (x) |0>
                            + I (x) conj(S(omega)) (x) |omega> (x) g_omega (x) |1> ]

with filter column g_omega = sqrt(1 - G(omega)) |0> + sqrt(G(omega)) |1>,
and the reflection R flips omega -> -omega together with the add qubit
whenever the filter qubit is set.  Then T^dag R T reproduces the
discriminant Q, and the walk unitary W = R (2 T T^dag - I) carries the
purified fixed point at eigenphase 0 with the quadratically amplified gap.

The frequency register is a qudit indexed by the actual Bohr frequencies
(not a binary pointer), which keeps every construction exact at desk scale;
R therefore factors as I (x) tail with a small tail matrix, and all
operators are applied through that factorization instead of materializing
walk-space-sized matrices.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .davies import (
    DaviesInstance,
    bohr_grid,
    filter_eval,
    gibbs_state,
    jump_operators,
    reference_bohr_grid,
    reflection_defect,
)
from .matrix_core import dagger, kron

__all__ = [
    "RegisterLayout",
    "WalkEmbedding",
    "WalkSpectrumReport",
    "GapReport",
    "build_reflection_tail",
    "isometry_from_jump_family",
    "coupling_rate_family",
    "build_isometry_single",
    "combine_couplings",
    "build_walk_unitary",
    "orthonormal_basis",
    "walk_spectrum",
    "gap_amplification_check",
]

_PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]])
_PAULI_Z = np.diag([1.0, -1.0])

BASIS_RANK_THRESHOLD = 1e-10


@dataclass(frozen=True)
class RegisterLayout:
    """Register dimensions and the frequency basis of a walk embedding.

    ``freq_labels`` lists the frequency-register basis labels (floats, or
    (block, theta) pairs for the enlarged construction); ``negation`` is the
    involution sending each label's index to the index of its negation.
    ``block_dim``/``anc_dim`` are bookkeeping for the enlarged construction,
    where the system registers already include the ancillas and the labels
    already include the block index.
    """

    sys2_dim: int
    sys1_dim: int
    freq_labels: tuple
    negation: tuple[int, ...]
    coupling_dim: int = 1
    theta_qubit: bool = False
    block_dim: int = 1
    anc_dim: int = 1

    filter_dim = 2
    add_dim = 2

    def __post_init__(self) -> None:
        n = len(self.freq_labels)
        if len(self.negation) != n:
            raise ValueError("negation permutation must cover every frequency label")
        neg = np.asarray(self.negation, dtype=int)
        if not np.array_equal(neg[neg], np.arange(n)):
            raise ValueError("frequency basis is not closed under negation")

    @property
    def freq_dim(self) -> int:
        return len(self.freq_labels)

    @property
    def tail_dim(self) -> int:
        return self.freq_dim * 4 * self.coupling_dim * (2 if self.theta_qubit else 1)

    @property
    def vec_dim(self) -> int:
        return self.sys2_dim * self.sys1_dim

    @property
    def total_dim(self) -> int:
        return self.vec_dim * self.tail_dim

    @property
    def register_dims(self) -> dict[str, int]:
        dims = {
            "sys2": self.sys2_dim,
            "sys1": self.sys1_dim,
            "freq": self.freq_dim,
            "filter": 2,
            "add": 2,
        }
        if self.coupling_dim > 1:
            dims["coupling"] = self.coupling_dim
        if self.theta_qubit:
            dims["theta"] = 2
        return dims


@dataclass
class WalkEmbedding:
    """Isometry T plus the factored reflection R = I (x) tail.

    ``encoding_scale`` documents the constant s with T^dag R T = s * Q; it
    is 1 except in the paper-theta coupling combination, where the isometry
    normalization costs a factor 1/M.
    """

    isometry: np.ndarray
    tail_reflection: np.ndarray
    identity_dim: int = 1
    layout: RegisterLayout | None = None
    encoding_scale: float = 1.0

    def __post_init__(self) -> None:
        self.isometry = np.asarray(self.isometry, dtype=complex)
        self.tail_reflection = np.asarray(self.tail_reflection, dtype=complex)
        if self.isometry.shape[0] != self.total_dim:
            raise ValueError(
                f"isometry has {self.isometry.shape[0]} rows, reflection factorization gives {self.total_dim}"
            )

    @property
    def T(self) -> np.ndarray:
        return self.isometry

    @property
    def total_dim(self) -> int:
        return self.identity_dim * self.tail_reflection.shape[0]

    @property
    def input_dim(self) -> int:
        return self.isometry.shape[1]

    @property
    def R(self) -> np.ndarray:
        """Dense reflection; only materialize for small instances."""
        return kron(np.eye(self.identity_dim), self.tail_reflection)

    @property
    def Pi(self) -> np.ndarray:
        """Dense projector T T^dag; only materialize for small instances."""
        return self.isometry @ dagger(self.isometry)

    @property
    def W(self) -> np.ndarray:
        """Dense walk unitary R (2 Pi - I); only materialize for small instances."""
        return self.apply_W(np.eye(self.total_dim, dtype=complex))

    def apply_R(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        single = x.ndim == 1
        cols = x.reshape(self.total_dim, -1)
        tail = self.tail_reflection.shape[0]
        blocks = cols.reshape(self.identity_dim, tail, -1)
        out = np.einsum("ts,dsk->dtk", self.tail_reflection, blocks).reshape(self.total_dim, -1)
        return out[:, 0] if single else out.reshape(x.shape)

    def apply_Pi(self, x: np.ndarray) -> np.ndarray:
        return self.isometry @ (dagger(self.isometry) @ np.asarray(x, dtype=complex))

    def apply_W(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        return self.apply_R(2.0 * self.apply_Pi(x) - x)

    def apply_W_dagger(self, x: np.ndarray) -> np.ndarray:
        rx = self.apply_R(np.asarray(x, dtype=complex))
        return 2.0 * self.apply_Pi(rx) - rx

    def encoded_matrix(self) -> np.ndarray:
        """T^dag R T, equal to encoding_scale times the discriminant."""
        return dagger(self.isometry) @ self.apply_R(self.isometry)

    def validate(self, *, tol: float = 1e-10, rng_probes: int = 4) -> dict[str, float]:
        """Isometry, reflection and walk-unitarity defects; raise when large."""
        gram = dagger(self.isometry) @ self.isometry
        defects = {
            "isometry": float(np.linalg.norm(gram - np.eye(self.input_dim), 2)),
            "reflection_hermitian": float(
                np.linalg.norm(self.tail_reflection - dagger(self.tail_reflection), 2)
            ),
            "reflection_involution": float(
                np.linalg.norm(
                    self.tail_reflection @ self.tail_reflection
                    - np.eye(self.tail_reflection.shape[0]),
                    2,
                )
            ),
        }
        rng = np.random.default_rng(7)
        worst = 0.0
        for _ in range(rng_probes):
            v = rng.standard_normal(self.total_dim) + 1j * rng.standard_normal(self.total_dim)
            v /= np.linalg.norm(v)
            worst = max(worst, float(np.linalg.norm(self.apply_W_dagger(self.apply_W(v)) - v)))
        defects["walk_unitary"] = worst
        for name, value in defects.items():
            if value > tol:
                raise ValueError(f"walk embedding defect {name!r} too large: {value:.3e}")
        return defects


def build_reflection_tail(layout: RegisterLayout) -> np.ndarray:
    """Reflection on freq (x) filter (x) add (x extras).

    Controlled on the filter qubit being |1>, negate the frequency label and
    flip the add qubit; extend by the identity on a coupling register and by
    Z on the paper-theta qubit.
    """
    n = layout.freq_dim
    flip = np.zeros((n, n))
    for i, j in enumerate(layout.negation):
        flip[j, i] = 1.0
    p0 = np.diag([1.0, 0.0])
    p1 = np.diag([0.0, 1.0])
    tail = kron(np.eye(n), kron(p0, np.eye(2))) + kron(flip, kron(p1, _PAULI_X))
    if layout.coupling_dim > 1:
        tail = kron(tail, np.eye(layout.coupling_dim))
    if layout.theta_qubit:
        tail = kron(tail, _PAULI_Z)
    return tail


def isometry_from_jump_family(
    jump_ops: Sequence[np.ndarray],
    rates: Sequence[float],
    layout: RegisterLayout,
) -> np.ndarray:
    """Assemble the closed-form isometry for one jump family.

    ``jump_ops`` and ``rates`` are aligned with ``layout.freq_labels``; the
    system carrier dimension is sys2_dim = sys1_dim.  Rates above 1 make the
    filter column ill-defined and raise.
    """
    if layout.coupling_dim != 1 or layout.theta_qubit:
        raise ValueError("single-family assembly expects an unextended layout")
    d = layout.sys2_dim
    if layout.sys1_dim != d:
        raise ValueError("system registers must have equal dimension")
    n = layout.freq_dim
    if len(jump_ops) != n or len(rates) != n:
        raise ValueError("jump family must align with the frequency basis")

    eye = np.eye(d)
    tensor = np.zeros((d * d, n, 2, 2, d * d), dtype=complex)
    for i, (op, g) in enumerate(zip(jump_ops, rates)):
        if g < 0 or g > 1 + 1e-12:
            raise ValueError(f"filter value must lie in [0, 1] for the isometry, got {g}")
        g = min(max(float(g), 0.0), 1.0)
        route0 = kron(op, eye) / np.sqrt(2.0)
        route1 = kron(eye, np.conj(op)) / np.sqrt(2.0)
        tensor[:, i, 0, 0, :] = np.sqrt(1.0 - g) * route0
        tensor[:, i, 1, 0, :] = np.sqrt(g) * route0
        tensor[:, i, 0, 1, :] = np.sqrt(1.0 - g) * route1
        tensor[:, i, 1, 1, :] = np.sqrt(g) * route1
    return tensor.reshape(d * d * n * 4, d * d)


def coupling_rate_family(
    inst: DaviesInstance, coupling_index: int
) -> tuple[np.ndarray, list[np.ndarray], np.ndarray]:
    """Frequencies, jump operators and filter rates of one coupling.

    Rates are evaluated at the Bohr frequencies of h = -ln(sigma), snapped
    onto the Gibbs reference grid so they agree exactly with the canonical
    form of the generator.
    """
    s, _ = inst.couplings[coupling_index]
    grid = bohr_grid(inst.hamiltonian)
    jumps = jump_operators(inst.hamiltonian, s)
    ref_grid = reference_bohr_grid(gibbs_state(inst.hamiltonian, inst.beta))
    snap_atol = max(ref_grid.tolerance, 1e-7)
    ops = [jumps[float(w)] for w in grid.frequencies]
    rates = np.array(
        [
            filter_eval(
                inst.filter_kind,
                ref_grid.snap(inst.beta * float(w), atol=snap_atol),
                normalize_peak=inst.normalize_peak,
            )
            for w in grid.frequencies
        ]
    )
    return grid.frequencies, ops, rates


def build_isometry_single(inst: DaviesInstance, coupling_index: int = 0) -> WalkEmbedding:
    """Walk embedding for a single reflection coupling of a Davies instance."""
    s, _ = inst.couplings[coupling_index]
    defect = reflection_defect(s)
    if defect > 1e-10:
        raise ValueError(f"coupling must be a reflection for the walk, |S^2 - I| = {defect:.3e}")
    if not inst.include_zero_frequency:
        raise ValueError("dropping the zero-frequency jumps breaks completeness; no walk embedding exists")

    freqs, ops, rates = coupling_rate_family(inst, coupling_index)
    d = inst.dim
    n = len(freqs)
    layout = RegisterLayout(
        sys2_dim=d,
        sys1_dim=d,
        freq_labels=tuple(float(w) for w in freqs),
        negation=tuple(n - 1 - i for i in range(n)),
    )
    isometry = isometry_from_jump_family(ops, rates, layout)
    tail = build_reflection_tail(layout)
    emb = WalkEmbedding(isometry=isometry, tail_reflection=tail, identity_dim=d * d, layout=layout)
    emb.validate()
    return emb


def combine_couplings(
    parts: Sequence[WalkEmbedding],
    weights: Sequence[float],
    mode: str = "state-prep",
) -> WalkEmbedding:
    """Combine per-coupling embeddings into one walk.

    ``state-prep`` forms T = sum_a sqrt(w_a) T_a (x) |a> with R (x) I, which
    encodes sum_a w_a Q_a exactly.  ``paper-theta`` attaches one more qubit
    in the state cos(t_a)|0> + sin(t_a)|1> with cos(2 t_a) = w_a and uses
    R (x) I (x) Z; normalizing that isometry costs a factor 1/M, recorded in
    ``encoding_scale``.
    """
    if mode not in ("state-prep", "paper-theta"):
        raise ValueError(f"unknown combination mode {mode!r}")
    if len(parts) != len(weights) or not parts:
        raise ValueError("one weight per embedding required")
    if abs(sum(weights) - 1.0) > 1e-10:
        raise ValueError(f"coupling weights must sum to 1, got {sum(weights)!r}")
    base = parts[0].layout
    if base is None:
        raise ValueError("combination needs layout-carrying embeddings")
    for part in parts:
        if part.layout is None or part.layout != base:
            raise ValueError("all couplings must share one register layout")

    n = len(parts)
    d2 = base.vec_dim
    tail_dim = base.tail_dim
    m = parts[0].input_dim
    stacked = np.stack([p.isometry.reshape(d2, tail_dim, m) for p in parts], axis=2)

    if mode == "state-prep":
        coeff = np.sqrt(np.asarray(weights, dtype=float))
        tensor = stacked * coeff[None, None, :, None]
        layout = RegisterLayout(
            sys2_dim=base.sys2_dim,
            sys1_dim=base.sys1_dim,
            freq_labels=base.freq_labels,
            negation=base.negation,
            coupling_dim=n,
            block_dim=base.block_dim,
            anc_dim=base.anc_dim,
        )
        isometry = tensor.reshape(d2 * tail_dim * n, m)
        scale = 1.0
    else:
        thetas = np.arccos(np.asarray(weights, dtype=float)) / 2.0
        qubit = np.stack([np.cos(thetas), np.sin(thetas)], axis=1)  # (n, 2)
        tensor = stacked[:, :, :, None, :] * qubit[None, None, :, :, None] / np.sqrt(n)
        layout = RegisterLayout(
            sys2_dim=base.sys2_dim,
            sys1_dim=base.sys1_dim,
            freq_labels=base.freq_labels,
            negation=base.negation,
            coupling_dim=n,
            theta_qubit=True,
            block_dim=base.block_dim,
            anc_dim=base.anc_dim,
        )
        isometry = tensor.reshape(d2 * tail_dim * n * 2, m)
        scale = 1.0 / n

    tail = build_reflection_tail(layout)
    emb = WalkEmbedding(
        isometry=isometry,
        tail_reflection=tail,
        identity_dim=d2,
        layout=layout,
        encoding_scale=scale,
    )
    emb.validate()
    return emb


def build_walk_unitary(
    isometry: np.ndarray, reflection: np.ndarray, *, encoding_scale: float = 1.0
) -> WalkEmbedding:
    """Embedding from a bare isometry and full reflection matrix."""
    emb = WalkEmbedding(
        isometry=isometry,
        tail_reflection=reflection,
        identity_dim=1,
        layout=None,
        encoding_scale=encoding_scale,
    )
    emb.validate()
    return emb


def orthonormal_basis(columns: np.ndarray, threshold: float = BASIS_RANK_THRESHOLD) -> np.ndarray:
    """Orthonormal basis of the column span, rank-revealed by SVD."""
    u, s, _ = np.linalg.svd(np.asarray(columns, dtype=complex), full_matrices=False)
    rank = int(np.sum(s > threshold))
    return u[:, :rank]


class GapReport(NamedTuple):
    delta: float
    theta: float
    sqrt_two_delta: float
    holds: bool


@dataclass
class WalkSpectrumReport:
    """Eigenphases of W on B = im(T) + R im(T), matched against arccos of Q.

    ``phases_b`` are the computed eigenphases on B, ``expected_phases`` the
    multiset +-arccos(lambda_j) over the eigenvalues of the encoded matrix
    (one phase for each eigenvalue at +-1).  Eigenphases on the complement
    of B are 0 or pi only, since there W acts as -R; their multiplicities
    are reported but excluded from any uniqueness claim.
    """

    phases_b: np.ndarray
    expected_phases: np.ndarray
    phase_match_residual: float
    zero_phase_count_b: int
    top_eigenspace_dim: int
    fixed_point_residual: float | None
    bperp_dim: int
    bperp_zero_count: int
    bperp_pi_count: int
    encoding_scale: float


def _canonical_phases(values: np.ndarray) -> np.ndarray:
    phases = np.angle(values)
    phases[phases < -np.pi + 1e-9] = np.pi
    return np.sort(phases)


def walk_spectrum(
    emb: WalkEmbedding,
    q: np.ndarray,
    *,
    one_tol: float = 1e-8,
    consistency_tol: float = 1e-8,
) -> WalkSpectrumReport:
    """Verify the spectral correspondence between the walk and Q.

    Requires T^dag R T = encoding_scale * Q; raises otherwise.  The walk is
    restricted to its invariant subspace B, whose eigenphases must match
    +-arccos applied to the eigenvalues of the encoded matrix.
    """
    q = np.asarray(q, dtype=complex)
    encoded = emb.encoded_matrix()
    mismatch = float(np.linalg.norm(encoded - emb.encoding_scale * q, 2))
    if mismatch > consistency_tol * max(1.0, float(np.linalg.norm(q, 2))):
        raise ValueError(f"embedding inconsistent with Q: |T^dag R T - s Q| = {mismatch:.3e}")

    herm = (encoded + dagger(encoded)) / 2.0
    evals, evecs = np.linalg.eigh(herm)

    expected: list[float] = []
    for lam in evals:
        if lam >= 1.0 - one_tol:
            expected.append(0.0)
        elif lam <= -1.0 + one_tol:
            expected.append(np.pi)
        else:
            phi = float(np.arccos(np.clip(lam, -1.0, 1.0)))
            expected.extend([phi, -phi])
    expected_phases = np.sort(np.array(expected))

    basis = orthonormal_basis(np.hstack([emb.isometry, emb.apply_R(emb.isometry)]))
    w_on_b = dagger(basis) @ emb.apply_W(basis)
    phases_b = _canonical_phases(np.linalg.eigvals(w_on_b))

    if len(phases_b) != len(expected_phases):
        raise ValueError(
            f"dimension of B is {len(phases_b)} but the encoded spectrum predicts {len(expected_phases)}"
        )
    residual = float(np.max(np.abs(phases_b - expected_phases))) if len(phases_b) else 0.0

    top_dim = int(np.sum(evals >= evals[-1] - one_tol)) if abs(evals[-1] - 1.0) <= one_tol else 0
    fixed_residual = None
    if top_dim == 1 and abs(evals[-1] - 1.0) <= one_tol:
        chi = emb.isometry @ evecs[:, -1]
        fixed_residual = float(np.linalg.norm(emb.apply_W(chi) - chi))

    bperp_dim = emb.total_dim - basis.shape[1]
    trace_r_total = emb.identity_dim * complex(np.trace(emb.tail_reflection))
    trace_r_on_b = complex(np.trace(dagger(basis) @ emb.apply_R(basis)))
    trace_w_bperp = -(trace_r_total - trace_r_on_b).real
    bperp_zero = int(round((bperp_dim + trace_w_bperp) / 2.0))
    bperp_pi = bperp_dim - bperp_zero

    return WalkSpectrumReport(
        phases_b=phases_b,
        expected_phases=expected_phases,
        phase_match_residual=residual,
        zero_phase_count_b=int(np.sum(np.abs(phases_b) <= one_tol)),
        top_eigenspace_dim=top_dim,
        fixed_point_residual=fixed_residual,
        bperp_dim=bperp_dim,
        bperp_zero_count=bperp_zero,
        bperp_pi_count=bperp_pi,
        encoding_scale=emb.encoding_scale,
    )


def gap_amplification_check(q: np.ndarray, *, top_tol: float = 1e-8) -> GapReport:
    """Classical gap Delta of Q at eigenvalue 1 and quantum gap arccos(1 - Delta).

    Raises unless the top eigenvalue of Q is 1 within ``top_tol``.  The
    quantum gap always dominates sqrt(2 Delta).
    """
    w = np.linalg.eigvalsh(np.asarray(q, dtype=complex))
    if abs(w[-1] - 1.0) > top_tol:
        raise ValueError(f"top eigenvalue of Q must be 1, got {w[-1]!r}")
    delta = float(1.0 - w[-2]) if len(w) >= 2 else 0.0
    delta = max(delta, 0.0)
    theta = float(np.arccos(np.clip(1.0 - delta, -1.0, 1.0)))
    sqrt_two_delta = float(np.sqrt(2.0 * delta))
    return GapReport(delta=delta, theta=theta, sqrt_two_delta=sqrt_two_delta, holds=theta >= sqrt_two_delta - 1e-12)
