"""The quantum discriminant of a detailed-balanced generator.

Conjugating a detailed-balanced Lindbladian by the half powers of Omega_f
produces a superoperator K that is hermitian and, remarkably, the same for
every weight function f.  For a generator in canonical form it has the
closed form

    K(A) = sum_{terms, omega} w * [ sqrt(G(omega) G(-omega)) X(omega) A X(omega)^dag
                                    - G(omega)/2 {X(omega)^dag X(omega), A} ]

whose vectorization Khat annihilates vec(sigma^(1/2)).  The discriminant is
Q = I + Khat; its top eigenvector is the purified fixed point and its gap
at eigenvalue 1 equals the generator's gap at eigenvalue 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lindblad import CanonicalLindbladian, Lindbladian, check_canonical, lindblad_matrix
from .matrix_core import dagger, hermiticity_defect, kron, vec
from .superop import ReferenceState, WeightFunction, omega_f_matrix

__all__ = [
    "Discriminant",
    "discriminant_matrix",
    "khat_from_jump_family",
    "similarity_khat",
    "verify_similarity",
    "purified_fixed_point",
]


@dataclass(frozen=True)
class Discriminant:
    """Vectorized hermitian K, the discriminant Q = I + K, and vec(sigma^(1/2))."""

    khat: np.ndarray
    q: np.ndarray
    fixed_point: np.ndarray

    @property
    def dim(self) -> int:
        return self.khat.shape[0]

    def validate(self, *, tol_herm: float = 1e-10, tol_fix: float = 1e-9) -> None:
        defect = hermiticity_defect(self.khat)
        if defect > tol_herm * max(1.0, float(np.linalg.norm(self.khat, 2))):
            raise ValueError(f"Khat is not hermitian: defect {defect:.3e}")
        residual = float(np.linalg.norm(self.khat @ self.fixed_point))
        if residual > tol_fix:
            raise ValueError(f"Khat does not annihilate the purified fixed point: {residual:.3e}")
        w = np.linalg.eigvalsh((self.q + dagger(self.q)) / 2)
        if w[0] < -1.0 - 1e-9 or w[-1] > 1.0 + 1e-9:
            raise ValueError(f"spectrum of Q leaves [-1, 1]: [{w[0]}, {w[-1]}]")


def khat_from_jump_family(
    entries,
    dim: int,
) -> np.ndarray:
    """Assemble Khat from (weight, jump, rate, partner rate) entries.

    Each entry contributes
    w * [sqrt(g g_neg) X (x) conj(X) - g/2 (X^dag X (x) I + I (x) (X^dag X)^T)].
    """
    eye = np.eye(dim)
    khat = np.zeros((dim * dim, dim * dim), dtype=complex)
    for weight, x, g, g_neg in entries:
        if g < 0 or g_neg < 0:
            raise ValueError(f"rates must be nonnegative, got {g}, {g_neg}")
        xdx = dagger(x) @ x
        khat += weight * (
            np.sqrt(g * g_neg) * kron(x, x.conj())
            - 0.5 * g * (kron(xdx, eye) + kron(eye, xdx.T))
        )
    return khat


def discriminant_matrix(cl: CanonicalLindbladian) -> Discriminant:
    """Closed-form discriminant of a canonical generator.

    The canonical invariants are re-validated first; the resulting
    discriminant passes :meth:`Discriminant.validate`.
    """
    check_canonical(cl)
    d = cl.dim
    entries = []
    for term in cl.terms:
        for _, x, g, partner in term.entries():
            entries.append((term.weight, x, g, float(term.rates[partner])))
    khat = khat_from_jump_family(entries, d)
    khat = (khat + dagger(khat)) / 2.0
    fixed = purified_fixed_point(cl.reference)
    disc = Discriminant(khat=khat, q=np.eye(d * d) + khat, fixed_point=fixed)
    disc.validate()
    return disc


def similarity_khat(lb: Lindbladian, ref: ReferenceState, f: WeightFunction) -> np.ndarray:
    """Khat through the similarity route Omega_f^{-1/2} . L . Omega_f^{1/2}."""
    lhat = lindblad_matrix(lb)
    return omega_f_matrix(ref, f, -0.5) @ lhat @ omega_f_matrix(ref, f, 0.5)


def verify_similarity(
    lb: Lindbladian,
    ref: ReferenceState,
    f: WeightFunction,
    disc: Discriminant,
) -> float:
    """Operator-norm residual between the closed-form Khat and the similarity route.

    Small (<= 1e-8) exactly when the generator is detailed balanced with
    respect to the reference state; the value is then the same for every
    weight function.
    """
    transformed = similarity_khat(lb, ref, f)
    return float(np.linalg.norm(disc.khat - transformed, 2))


def purified_fixed_point(ref: ReferenceState) -> np.ndarray:
    """Unit vector vec(sigma^(1/2)); its norm is sqrt(Tr sigma) = 1 already."""
    v = vec(ref.sigma_power(0.5))
    return v / np.linalg.norm(v)
