"""Energy and Bohr-frequency estimation under a rounding promise.

An (r, alpha)-rounding promise keeps every eigenvalue of H at distance at
least alpha / 2^(r+1) from the grid points x / 2^r, so floor-rounding the
energies to r bits is stable.  Under the promise, the ideal estimation
unitary writes |floor(eps_k 2^r)> onto a pointer register, and a coupling
reflection sandwiched between two estimations records the floor-rounded
Bohr frequency: the composite circuit is exactly ideal Bohr-frequency
estimation for the floor-rounded Hamiltonian.

Pointer arithmetic is modular.  Energy pointers live on 2^r values; Bohr
pointers hold signed differences in [-(2^r - 1), 2^r - 1] and therefore use
a 2^(r+1)-dimensional register, which keeps negation collision-free.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .davies import bohr_grid, gibbs_state, jump_operators
from .matrix_core import SpectralDecomposition, kron
from .superop import ReferenceState

__all__ = [
    "RoundingPromise",
    "RoundedHamiltonian",
    "check_rounding_promise",
    "rounded_hamiltonian",
    "ideal_estimation_unitary",
    "bohr_estimation_unitary",
    "ideal_bohr_isometry",
    "purification_overlap",
    "query_cost_estimate",
]


@dataclass(frozen=True)
class RoundingPromise:
    """Pointer width r and promise margin alpha in (0, 1)."""

    r: int
    alpha: float

    def __post_init__(self) -> None:
        if self.r < 1:
            raise ValueError(f"pointer width must be a positive integer, got {self.r}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"promise margin must lie in (0, 1), got {self.alpha}")


@dataclass(frozen=True)
class RoundedHamiltonian:
    """Original spectrum alongside its floor-rounding to r bits.

    The rounded eigenvalues are floor(eps * 2^r) / 2^r with the original
    projectors; clusters whose floors coincide are merged.
    """

    original: SpectralDecomposition
    r: int
    rounded: SpectralDecomposition


def _require_unit_interval(hamiltonian: SpectralDecomposition) -> np.ndarray:
    eps = hamiltonian.eigenvalues
    if eps[0] < 0.0 or eps[-1] >= 1.0:
        raise ValueError(f"eigenvalues must lie in [0, 1), got range [{eps[0]}, {eps[-1]}]")
    return eps


def check_rounding_promise(hamiltonian: SpectralDecomposition, promise: RoundingPromise) -> bool:
    """Whether every eigenvalue clears every grid point x/2^r by alpha/2^(r+1).

    The margin carries a relative slack of 1e-12 so boundary cases are not
    decided by rounding noise; eigenvalues exactly on the grid still fail
    for every positive alpha.
    """
    eps = _require_unit_interval(hamiltonian)
    grid = np.arange(2**promise.r + 1) / 2.0**promise.r
    margin = promise.alpha / 2.0 ** (promise.r + 1)
    distances = np.abs(eps[:, None] - grid[None, :])
    return bool(np.min(distances) >= margin * (1.0 - 1e-12))


def floor_pointer(eps: float, r: int) -> int:
    """floor(eps * 2^r) as an integer pointer value."""
    return int(np.floor(eps * 2.0**r))


def rounded_hamiltonian(hamiltonian: SpectralDecomposition, r: int) -> RoundedHamiltonian:
    """Floor-round the spectrum to r bits, merging clusters with equal floors."""
    eps = _require_unit_interval(hamiltonian)
    if r < 1:
        raise ValueError(f"pointer width must be a positive integer, got {r}")
    floors = [floor_pointer(e, r) for e in eps]
    merged: dict[int, np.ndarray] = {}
    for value, proj in zip(floors, hamiltonian.projectors):
        if value in merged:
            merged[value] = merged[value] + proj
        else:
            merged[value] = proj.copy()
    keys = sorted(merged)
    rounded = SpectralDecomposition(
        eigenvalues=np.array([k / 2.0**r for k in keys]),
        projectors=tuple(merged[k] for k in keys),
        grouping_tolerance=hamiltonian.grouping_tolerance,
    )
    return RoundedHamiltonian(original=hamiltonian, r=r, rounded=rounded)


def _modular_add(shift: int, dim: int) -> np.ndarray:
    out = np.zeros((dim, dim))
    for z in range(dim):
        out[(z + shift) % dim, z] = 1.0
    return out


def ideal_estimation_unitary(
    hamiltonian: SpectralDecomposition, r: int, *, pointer_dim: int | None = None
) -> np.ndarray:
    """U = sum_k Pi_k (x) (add floor(eps_k 2^r) mod pointer_dim).

    On the zero-pointer sector this writes the floor-rounded energy; other
    sectors are completed by the same modular addition, which is the only
    freedom in the construction and affects none of the downstream claims.
    """
    eps = _require_unit_interval(hamiltonian)
    dim = pointer_dim if pointer_dim is not None else 2**r
    out = np.zeros((hamiltonian.dim * dim, hamiltonian.dim * dim), dtype=complex)
    for e, proj in zip(eps, hamiltonian.projectors):
        out += kron(proj, _modular_add(floor_pointer(e, r), dim))
    return out


def _subtract_into_first(dim: int) -> np.ndarray:
    """|a>|b> -> |(b - a) mod dim>|b> on two pointer registers."""
    out = np.zeros((dim * dim, dim * dim))
    for a in range(dim):
        for b in range(dim):
            out[((b - a) % dim) * dim + b, a * dim + b] = 1.0
    return out


def bohr_estimation_unitary(
    hamiltonian: SpectralDecomposition, s: np.ndarray, r: int
) -> np.ndarray:
    """Bohr-frequency estimation as the five-step composite circuit.

    Registers: system (x) pointer A (x) pointer B, both pointers of
    dimension 2^(r+1).  The circuit estimates the incoming energy into A,
    applies the reflection S, estimates the outgoing energy into B, stores
    the signed difference B - A in A, and uncomputes B.  On the zero-pointer
    sector the result records floor-rounded Bohr frequencies while B
    returns to zero exactly.
    """
    s = np.asarray(s, dtype=complex)
    d = hamiltonian.dim
    if s.shape != (d, d):
        raise ValueError(f"coupling has shape {s.shape}, expected ({d}, {d})")
    eps = _require_unit_interval(hamiltonian)
    p = 2 ** (r + 1)
    eye_p = np.eye(p)
    estimate_a = np.zeros((d * p * p, d * p * p), dtype=complex)
    estimate_b = np.zeros((d * p * p, d * p * p), dtype=complex)
    for e, proj in zip(eps, hamiltonian.projectors):
        shift = _modular_add(floor_pointer(e, r), p)
        estimate_a += kron(proj, kron(shift, eye_p))
        estimate_b += kron(proj, kron(eye_p, shift))
    reflect = kron(s, np.eye(p * p))
    subtract = kron(np.eye(d), _subtract_into_first(p))
    return estimate_b.conj().T @ subtract @ estimate_b @ reflect @ estimate_a


def ideal_bohr_isometry(
    hamiltonian: SpectralDecomposition, s: np.ndarray, r: int
) -> np.ndarray:
    """Direct Bohr estimation of the floor-rounded Hamiltonian on |0>|0>.

    Columns are indexed by system basis states: the output is
    sum_w S_rounded(w) |psi> (x) |w 2^r mod 2^(r+1)> (x) |0>, assembled from
    the rounded spectrum's own Bohr grid and jump operators.
    """
    rounded = rounded_hamiltonian(hamiltonian, r).rounded
    grid = bohr_grid(rounded)
    jumps = jump_operators(rounded, s)
    d = rounded.dim
    p = 2 ** (r + 1)
    out = np.zeros((d * p * p, d), dtype=complex)
    for freq in grid.frequencies:
        pointer = int(round(float(freq) * 2.0**r)) % p
        block = np.zeros((p * p, 1))
        block[pointer * p + 0, 0] = 1.0
        out += kron(jumps[float(freq)], block)
    return out


def purification_overlap(sigma: ReferenceState, sigma_tilde: ReferenceState) -> float:
    """Inner product of the unit-norm purified fixed points, Tr(sqrt(sigma) sqrt(sigma_tilde)).

    For Gibbs states of H and its r-bit floor-rounding at inverse
    temperature beta this is at least 1 - beta / 2^r.
    """
    if sigma.dim != sigma_tilde.dim:
        raise ValueError("states must share a dimension")
    value = np.trace(sigma.sigma_power(0.5) @ sigma_tilde.sigma_power(0.5))
    return float(value.real)


def gibbs_overlap_pair(
    hamiltonian: SpectralDecomposition, beta: float, r: int
) -> tuple[float, float]:
    """Exact purification overlap for (H, rounded H) and the 1 - beta/2^r bound."""
    rounded = rounded_hamiltonian(hamiltonian, r).rounded
    exact = purification_overlap(gibbs_state(hamiltonian, beta), gibbs_state(rounded, beta))
    return exact, 1.0 - beta / 2.0**r


def query_cost_estimate(promise: RoundingPromise, delta: float) -> float:
    """Relative query cost alpha^-1 ln(1/delta) (2^r + log2(1/alpha)).

    Unitless, with all big-O constants dropped; vanishes as delta -> 1.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError(f"failure probability must lie in (0, 1), got {delta}")
    inv_alpha = 1.0 / promise.alpha
    return inv_alpha * np.log(1.0 / delta) * (2.0**promise.r + np.log2(inv_alpha))
