"""Seeded random instances: Davies, canonical detailed-balanced, channels.

Canonical instances are detailed balanced by construction: a random
full-rank state fixes the Bohr grid of h = -ln(sigma), each jump is sampled
inside one modular eigenspace via the Lambda_theta projection, rates follow
the Metropolis rule, and the assembled coupling is rescaled below norm 1 so
the reflection dilation exists.  Channels come from exponentiating a random
detailed-balanced generator, which preserves detailed balance, with Kraus
operators extracted from the Choi matrix.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import expm

from .davies import DaviesInstance, davies_instance, filter_eval, reference_bohr_grid
from .lindblad import (
    CanonicalLindbladian,
    Lindbladian,
    QuantumChannel,
    canonical_term,
    lindblad_matrix,
    to_lindbladian,
)
from .matrix_core import SpectralDecomposition, dagger, eig_hermitian
from .superop import ReferenceState, reference_state

__all__ = [
    "random_unitary",
    "random_hermitian",
    "random_reflection",
    "random_density",
    "random_hamiltonian",
    "random_davies_instance",
    "random_canonical_lindbladian",
    "random_db_channel",
    "kraus_from_superoperator",
]


def random_unitary(rng: np.random.Generator, d: int) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Gaussian matrix."""
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_hermitian(rng: np.random.Generator, d: int, scale: float = 1.0) -> np.ndarray:
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return scale * (z + dagger(z)) / 2.0


def random_reflection(rng: np.random.Generator, d: int) -> np.ndarray:
    """Sign function of a random hermitian matrix; squares to the identity."""
    w, v = np.linalg.eigh(random_hermitian(rng, d))
    signs = np.where(w >= 0, 1.0, -1.0)
    return (v * signs) @ dagger(v)


def random_density(rng: np.random.Generator, d: int) -> ReferenceState:
    """Full-rank density matrix with well-separated spectrum."""
    probs = rng.uniform(0.5, 1.5, size=d)
    probs = probs / probs.sum()
    probs = 0.8 * probs + 0.2 / d
    u = random_unitary(rng, d)
    sigma = (u * probs) @ dagger(u)
    sigma = (sigma + dagger(sigma)) / 2.0
    sigma = sigma / np.trace(sigma).real
    return reference_state(sigma)


def random_hamiltonian(
    rng: np.random.Generator, d: int, *, degenerate: bool = False
) -> SpectralDecomposition:
    """Random Hamiltonian with eigenvalues in [0, 1).

    With ``degenerate`` one eigenvalue is duplicated, exercising the
    degeneracy-grouped projectors.
    """
    n_levels = max(1, d - 1) if degenerate and d >= 2 else d
    levels = np.sort(rng.uniform(0.02, 0.95, size=n_levels))
    while np.any(np.diff(levels) < 5e-3):
        levels = np.sort(rng.uniform(0.02, 0.95, size=n_levels))
    eigs = list(levels)
    if degenerate and d >= 2:
        eigs.append(levels[rng.integers(0, n_levels)])
    eigs = np.sort(np.array(eigs))
    u = random_unitary(rng, d)
    h = (u * eigs) @ dagger(u)
    return eig_hermitian((h + dagger(h)) / 2.0)


def random_davies_instance(
    rng: np.random.Generator,
    d: int,
    n_couplings: int = 1,
    beta: float | None = None,
    filter_kind: str = "metropolis",
    *,
    degenerate: bool = False,
) -> DaviesInstance:
    """Random Davies instance with reflection couplings."""
    hamiltonian = random_hamiltonian(rng, d, degenerate=degenerate)
    if beta is None:
        beta = float(rng.uniform(0.2, 3.0))
    weights = rng.dirichlet(np.full(n_couplings, 5.0))
    couplings = [(random_reflection(rng, d), float(w)) for w in weights]
    return davies_instance(hamiltonian, beta, couplings, filter_kind)


def random_canonical_lindbladian(
    rng: np.random.Generator,
    d: int,
    n_terms: int = 1,
    *,
    max_norm: float = 0.95,
) -> CanonicalLindbladian:
    """Random canonical detailed-balanced generator.

    Jumps at each positive Bohr frequency are Lambda_theta projections of a
    random matrix; the zero-frequency jump is hermitian.  Each term is
    scaled so the assembled coupling sum has norm at most ``max_norm``,
    keeping the reflection dilation available.
    """
    ref = random_density(rng, d)
    grid = reference_bohr_grid(ref)
    projs = ref.decomposition.projectors

    def lam(theta_idx: int, a: np.ndarray) -> np.ndarray:
        out = np.zeros_like(a)
        for k, l in grid.index_sets[theta_idx]:
            out += projs[k] @ a @ projs[l]
        return out

    weights = rng.dirichlet(np.full(n_terms, 5.0))
    terms = []
    for w in weights:
        pairs = []
        assembled = np.zeros((d, d), dtype=complex)
        for idx, theta in enumerate(grid.frequencies):
            if theta < 0.0:
                continue
            raw = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
            x_theta = lam(idx, raw)
            if theta == 0.0:
                x_theta = (x_theta + dagger(x_theta)) / 2.0
                assembled += x_theta
            else:
                assembled += x_theta + dagger(x_theta)
            pairs.append((float(theta), x_theta))
        norm = float(np.linalg.norm(assembled, 2))
        scale = max_norm / norm if norm > max_norm else 1.0
        rated = [
            (
                theta,
                scale * x_theta,
                filter_eval("metropolis", theta),
                filter_eval("metropolis", -theta),
            )
            for theta, x_theta in pairs
        ]
        terms.append(canonical_term(float(w), rated))
    return CanonicalLindbladian(reference=ref, terms=tuple(terms))


def kraus_from_superoperator(that: np.ndarray, d: int, *, tol: float = 1e-12) -> QuantumChannel:
    """Kraus operators of a completely positive map from its vectorized form.

    Reshuffles That into the Choi matrix and keeps the eigenvectors with
    positive weight.
    """
    choi = that.reshape(d, d, d, d).transpose(0, 2, 1, 3).reshape(d * d, d * d)
    choi = (choi + dagger(choi)) / 2.0
    w, v = np.linalg.eigh(choi)
    ops = []
    for weight, column in zip(w[::-1], v[:, ::-1].T):
        if weight < tol:
            break
        ops.append(np.sqrt(weight) * column.reshape(d, d))
    return QuantumChannel(kraus_ops=tuple(ops))


def random_db_channel(
    rng: np.random.Generator, d: int, *, time: float = 0.7
) -> tuple[QuantumChannel, ReferenceState]:
    """Detailed-balanced channel exp(t L) of a random canonical generator."""
    cl = random_canonical_lindbladian(rng, d)
    that = expm(time * lindblad_matrix(to_lindbladian(cl)))
    return kraus_from_superoperator(that, d), cl.reference
