"""Lindbladians, their canonical detailed-balanced form, and channels.

A purely irreversible Lindbladian acts on states as

    L(rho) = sum_i  L_i rho L_i^dag - 1/2 {L_i^dag L_i, rho}

and on observables as its Hilbert-Schmidt adjoint L*.  Detailed balance with
respect to a full-rank state sigma means L* is hermitian in the sigma-GNS
inner product; equivalently Omega_f . L* = L . Omega_f for every weight
function f.  Detailed-balanced generators decompose into canonical terms
whose jump operators are eigenvectors of the modular operator, labelled by
Bohr frequencies of h = -ln(sigma); that structure is what the discriminant
and walk constructions consume.

Canonical terms store their jumps as aligned arrays with an explicit
negation pairing instead of a plain frequency map: at infinite temperature
all Bohr frequencies of h collapse to 0, so several jumps may legitimately
share a frequency label.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .matrix_core import dagger, hermiticity_defect, kron
from .superop import ReferenceState, WeightFunction, modular_apply

__all__ = [
    "Lindbladian",
    "QuantumChannel",
    "CanonicalTerm",
    "CanonicalLindbladian",
    "canonical_term",
    "check_canonical",
    "to_lindbladian",
    "apply_schrodinger",
    "apply_heisenberg",
    "lindblad_matrix",
    "heisenberg_matrix",
    "channel_matrix",
    "channel_to_lindbladian",
    "check_detailed_balance",
    "fixed_point_residual",
    "spectral_gap",
]

DB_TOLERANCE = 1e-8


@dataclass(frozen=True)
class Lindbladian:
    """Purely irreversible generator given by its jump operators."""

    jump_ops: tuple[np.ndarray, ...]
    dim: int

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "jump_ops", tuple(np.asarray(op, dtype=complex) for op in self.jump_ops)
        )
        for op in self.jump_ops:
            if op.shape != (self.dim, self.dim):
                raise ValueError(f"jump operator has shape {op.shape}, expected ({self.dim}, {self.dim})")


@dataclass(frozen=True)
class QuantumChannel:
    """Quantum channel in Kraus form; completeness is validated on demand."""

    kraus_ops: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        ops = tuple(np.asarray(op, dtype=complex) for op in self.kraus_ops)
        if not ops:
            raise ValueError("a channel needs at least one Kraus operator")
        object.__setattr__(self, "kraus_ops", ops)

    @property
    def dim(self) -> int:
        return self.kraus_ops[0].shape[0]

    def completeness_defect(self) -> float:
        acc = np.zeros((self.dim, self.dim), dtype=complex)
        for op in self.kraus_ops:
            acc += dagger(op) @ op
        return float(np.linalg.norm(acc - np.eye(self.dim), 2))


@dataclass(frozen=True)
class CanonicalTerm:
    """One convex-combination term of a canonical detailed-balanced generator.

    Entry i carries a Bohr frequency label ``frequencies[i]``, a jump
    operator ``jumps[i]`` and a rate ``rates[i] >= 0``.  ``negation[i]`` is
    the index of the partner entry at the negated frequency, an involution
    with ``jumps[negation[i]] = jumps[i]^dag``.
    """

    weight: float
    frequencies: np.ndarray
    jumps: tuple[np.ndarray, ...]
    rates: np.ndarray
    negation: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "frequencies", np.asarray(self.frequencies, dtype=float))
        object.__setattr__(self, "rates", np.asarray(self.rates, dtype=float))
        object.__setattr__(self, "negation", np.asarray(self.negation, dtype=int))
        object.__setattr__(self, "jumps", tuple(np.asarray(x, dtype=complex) for x in self.jumps))
        n = len(self.frequencies)
        if not (len(self.jumps) == len(self.rates) == len(self.negation) == n):
            raise ValueError("frequencies, jumps, rates and negation must be aligned")
        if n and not np.array_equal(self.negation[self.negation], np.arange(n)):
            raise ValueError("negation pairing must be an involution")

    @property
    def dim(self) -> int:
        return self.jumps[0].shape[0]

    def entries(self) -> Iterable[tuple[float, np.ndarray, float, int]]:
        """Yield (frequency, jump, rate, partner index) per entry."""
        for i in range(len(self.frequencies)):
            yield float(self.frequencies[i]), self.jumps[i], float(self.rates[i]), int(self.negation[i])


@dataclass(frozen=True)
class CanonicalLindbladian:
    """Convex combination of canonical terms over one reference state."""

    reference: ReferenceState
    terms: tuple[CanonicalTerm, ...]

    @property
    def dim(self) -> int:
        return self.reference.dim


def canonical_term(
    weight: float,
    pairs: Sequence[tuple[float, np.ndarray, float, float]],
    *,
    hermitian_tol: float = 1e-10,
) -> CanonicalTerm:
    """Build a term from frequency pairs.

    Each pair is ``(omega, X, g_plus, g_minus)`` with ``omega >= 0``: it
    contributes the entry (omega, X, g_plus) and its partner
    (-omega, X^dag, g_minus).  A pair at omega == 0 with hermitian X
    contributes a single self-paired entry (g_plus and g_minus must agree);
    a non-hermitian X at omega == 0 still yields two paired entries.
    """
    freqs: list[float] = []
    jumps: list[np.ndarray] = []
    rates: list[float] = []
    negation: list[int] = []
    for omega, x, g_plus, g_minus in pairs:
        omega = float(omega)
        if omega < 0.0:
            raise ValueError(f"pairs are keyed by their nonnegative frequency, got {omega}")
        x = np.asarray(x, dtype=complex)
        scale = max(1.0, float(np.linalg.norm(x, 2)))
        if omega == 0.0 and hermiticity_defect(x) <= hermitian_tol * scale:
            if abs(g_plus - g_minus) > 1e-12 * max(1.0, abs(g_plus)):
                raise ValueError("a self-paired zero-frequency jump needs a single rate")
            i = len(freqs)
            freqs.append(0.0)
            jumps.append(x)
            rates.append(float(g_plus))
            negation.append(i)
        else:
            i = len(freqs)
            freqs.extend([omega, -omega])
            jumps.extend([x, dagger(x)])
            rates.extend([float(g_plus), float(g_minus)])
            negation.extend([i + 1, i])
    return CanonicalTerm(
        weight=float(weight),
        frequencies=np.array(freqs, dtype=float),
        jumps=tuple(jumps),
        rates=np.array(rates, dtype=float),
        negation=np.array(negation, dtype=int),
    )


def check_canonical(cl: CanonicalLindbladian, *, raise_on_failure: bool = True) -> dict[str, float]:
    """Verify the canonical-form invariants; return the worst residuals.

    Checked per entry: the negation partner carries the adjoint jump, the
    jump is an eigenvector of the modular operator with eigenvalue
    e^{-omega}, rates are nonnegative and satisfy G(omega) =
    e^{-omega} G(-omega).  Globally: weights sum to 1 and every frequency
    lies on the Bohr grid of h = -ln(sigma).
    """
    ref = cl.reference
    energies = ref.energies
    allowed = np.unique(
        np.round(
            np.array([ek - el for ek in energies for el in energies]),
            decimals=12,
        )
    )
    tol_grid = ref.decomposition.grouping_tolerance

    residuals = {
        "adjoint_pairing": 0.0,
        "modular_eigenvector": 0.0,
        "kms_ratio": 0.0,
        "weight_sum": abs(sum(t.weight for t in cl.terms) - 1.0),
        "frequency_grid": 0.0,
        "rate_sign": 0.0,
    }
    for term in cl.terms:
        if not 0.0 <= term.weight <= 1.0 + 1e-12:
            raise ValueError(f"term weight {term.weight} outside [0, 1]")
        for omega, x, g, partner in term.entries():
            scale = max(1.0, float(np.linalg.norm(x, 2)))
            residuals["adjoint_pairing"] = max(
                residuals["adjoint_pairing"],
                float(np.linalg.norm(term.jumps[partner] - dagger(x), 2)) / scale,
            )
            residuals["modular_eigenvector"] = max(
                residuals["modular_eigenvector"],
                float(np.linalg.norm(modular_apply(ref, x) - np.exp(-omega) * x, 2)) / scale,
            )
            g_partner = float(term.rates[partner])
            kms = abs(g - np.exp(-omega) * g_partner)
            kms_scale = max(abs(g), abs(np.exp(-omega) * g_partner), 1e-30)
            residuals["kms_ratio"] = max(residuals["kms_ratio"], kms / kms_scale)
            residuals["rate_sign"] = max(residuals["rate_sign"], max(0.0, -g))
            residuals["frequency_grid"] = max(
                residuals["frequency_grid"], float(np.min(np.abs(allowed - omega)))
            )
            if abs(term.frequencies[partner] + omega) > 1e-12 * max(1.0, abs(omega)):
                raise ValueError("negation partner does not carry the negated frequency")

    tolerances = {
        "adjoint_pairing": 1e-10,
        "modular_eigenvector": 1e-9,
        "kms_ratio": 1e-10,
        "weight_sum": 1e-10,
        "frequency_grid": max(tol_grid, 1e-9),
        "rate_sign": 0.0,
    }
    if raise_on_failure:
        for name, value in residuals.items():
            if value > tolerances[name]:
                raise ValueError(f"canonical invariant {name!r} violated: residual {value:.3e}")
    return residuals


def to_lindbladian(cl: CanonicalLindbladian) -> Lindbladian:
    """Flatten canonical terms into weighted jump operators sqrt(w G) X."""
    ops = []
    for term in cl.terms:
        for _, x, g, _ in term.entries():
            if g < 0:
                raise ValueError(f"negative rate {g}")
            if term.weight * g > 0.0:
                ops.append(np.sqrt(term.weight * g) * x)
    return Lindbladian(jump_ops=tuple(ops), dim=cl.dim)


def apply_schrodinger(lb: Lindbladian, rho: np.ndarray) -> np.ndarray:
    """L(rho); trace-free for any input."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (lb.dim, lb.dim):
        raise ValueError(f"state has shape {rho.shape}, expected ({lb.dim}, {lb.dim})")
    out = np.zeros_like(rho)
    for op in lb.jump_ops:
        opd_op = dagger(op) @ op
        out += op @ rho @ dagger(op) - 0.5 * (opd_op @ rho + rho @ opd_op)
    return out


def apply_heisenberg(lb: Lindbladian, obs: np.ndarray) -> np.ndarray:
    """L*(O), the Hilbert-Schmidt adjoint; unital, L*(I) = 0."""
    obs = np.asarray(obs, dtype=complex)
    if obs.shape != (lb.dim, lb.dim):
        raise ValueError(f"observable has shape {obs.shape}, expected ({lb.dim}, {lb.dim})")
    out = np.zeros_like(obs)
    for op in lb.jump_ops:
        opd_op = dagger(op) @ op
        out += dagger(op) @ obs @ op - 0.5 * (opd_op @ obs + obs @ opd_op)
    return out


def lindblad_matrix(lb: Lindbladian) -> np.ndarray:
    """Vectorized generator: Lhat vec(rho) = vec(L(rho))."""
    d = lb.dim
    eye = np.eye(d)
    out = np.zeros((d * d, d * d), dtype=complex)
    for op in lb.jump_ops:
        opd_op = dagger(op) @ op
        out += kron(op, op.conj()) - 0.5 * (kron(opd_op, eye) + kron(eye, opd_op.T))
    return out


def heisenberg_matrix(lb: Lindbladian) -> np.ndarray:
    """Vectorized adjoint generator; equals the dagger of :func:`lindblad_matrix`."""
    return dagger(lindblad_matrix(lb))


def channel_matrix(channel: QuantumChannel) -> np.ndarray:
    """Vectorized channel: That vec(rho) = vec(T(rho))."""
    d = channel.dim
    out = np.zeros((d * d, d * d), dtype=complex)
    for op in channel.kraus_ops:
        out += kron(op, op.conj())
    return out


def channel_to_lindbladian(channel: QuantumChannel, *, tol: float = 1e-10) -> Lindbladian:
    """Convert a channel to the generator L = T - I.

    With complete Kraus operators the anticommutator part collapses to
    -rho, so the Kraus operators serve directly as jump operators.
    """
    defect = channel.completeness_defect()
    if defect > tol:
        raise ValueError(f"Kraus completeness violated: |sum A^dag A - I| = {defect:.3e}")
    return Lindbladian(jump_ops=channel.kraus_ops, dim=channel.dim)


def check_detailed_balance(lb: Lindbladian, ref: ReferenceState, f: WeightFunction) -> float:
    """Operator-norm residual of Omega_f . L* - L . Omega_f.

    The difference superoperator is assembled in the matrix-unit basis (its
    columns are the evaluations on all d^2 matrix units); a residual below
    ``DB_TOLERANCE`` declares the generator detailed balanced with respect
    to the reference state.
    """
    from .superop import omega_f_matrix

    d = lb.dim
    if ref.dim != d:
        raise ValueError(f"dimension mismatch: generator {d}, reference {ref.dim}")
    lhat = lindblad_matrix(lb)
    omega = omega_f_matrix(ref, f, 1.0)
    diff = omega @ dagger(lhat) - lhat @ omega
    return float(np.linalg.norm(diff, 2))


def fixed_point_residual(lb: Lindbladian, sigma: np.ndarray) -> float:
    """Spectral norm of L(sigma); zero iff sigma is stationary."""
    return float(np.linalg.norm(apply_schrodinger(lb, np.asarray(sigma, dtype=complex)), 2))


def spectral_gap(matrix: np.ndarray, top_eigenvalue: float, *, tol: float = 1e-9) -> float:
    """Gap between a stated top eigenvalue and the rest of the spectrum.

    ``matrix`` must be hermitian and ``top_eigenvalue`` must occur in its
    spectrum within ``tol``.  Returns top minus the second largest
    eigenvalue (counted with multiplicity), which is 0 for a degenerate top.
    """
    w = np.linalg.eigvalsh(np.asarray(matrix, dtype=complex))
    if np.min(np.abs(w - top_eigenvalue)) > tol:
        raise ValueError(f"{top_eigenvalue} is not an eigenvalue (distance {np.min(np.abs(w - top_eigenvalue)):.3e})")
    if len(w) < 2:
        return 0.0
    return float(top_eigenvalue - np.sort(w)[-2])
