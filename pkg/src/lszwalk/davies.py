"""Davies generators: Gibbs states, Bohr frequencies, jumps and filters.

A Davies instance is a Hamiltonian H = sum_k eps_k Pi_k with eps_k in [0, 1],
an inverse temperature beta >= 0, and weighted hermitian coupling operators.
Each coupling S decomposes into jump operators

    S(omega) = sum_{eps_k - eps_l = omega} Pi_k S Pi_l

indexed by the Bohr frequencies omega of H; together with a filter function
G evaluated at beta * omega they assemble into the canonical form of a
generator that is detailed balanced with respect to the Gibbs state
e^{-beta H} / Z.

Filter arguments are Bohr frequencies of h = -ln(sigma) = beta H (up to an
additive shift that cancels in differences), which keeps the rate ratio
G(omega) = e^{-omega} G(-omega) free of beta.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .lindblad import CanonicalLindbladian, CanonicalTerm, canonical_term
from .matrix_core import (
    DEFAULT_GROUPING_TOL,
    SpectralDecomposition,
    dagger,
    kron,
    matfunc,
    require_hermitian,
)
from .superop import ReferenceState

__all__ = [
    "FILTER_KINDS",
    "BohrGrid",
    "DaviesInstance",
    "davies_instance",
    "gibbs_state",
    "bohr_grid",
    "reference_bohr_grid",
    "jump_operators",
    "filter_eval",
    "davies_lindbladian",
    "commutant_dimension",
    "reflection_defect",
]

FILTER_KINDS = ("metropolis", "glauber")


@dataclass(frozen=True)
class BohrGrid:
    """Bohr frequencies of a Hamiltonian with their index pair sets.

    ``frequencies`` is sorted, contains 0, and is exactly closed under
    negation.  ``index_sets[i]`` lists the (k, l) eigenvalue-cluster pairs
    with eps_k - eps_l = frequencies[i] (within the tolerance), and the set
    at -omega holds the transposed pairs.
    """

    frequencies: np.ndarray
    index_sets: tuple[tuple[tuple[int, int], ...], ...]
    tolerance: float

    @property
    def size(self) -> int:
        return len(self.frequencies)

    def index_of(self, omega: float, *, atol: float | None = None) -> int:
        """Index of the grid value nearest to ``omega``; errors when off-grid."""
        atol = self.tolerance if atol is None else atol
        i = int(np.argmin(np.abs(self.frequencies - omega)))
        if abs(self.frequencies[i] - omega) > atol:
            raise ValueError(f"{omega!r} is not on the Bohr grid (nearest {self.frequencies[i]!r})")
        return i

    def negation_index(self, i: int) -> int:
        return self.size - 1 - i

    def snap(self, omega: float, *, atol: float | None = None) -> float:
        return float(self.frequencies[self.index_of(omega, atol=atol)])


def _bohr_grid_from_energies(
    energies: np.ndarray, tolerance: float
) -> BohrGrid:
    energies = np.asarray(energies, dtype=float)
    m = len(energies)
    diffs = sorted(
        ((energies[k] - energies[l], k, l) for k in range(m) for l in range(m)),
        key=lambda t: t[0],
    )

    clusters: list[list[tuple[float, int, int]]] = [[diffs[0]]]
    for item in diffs[1:]:
        if item[0] - clusters[-1][-1][0] <= tolerance:
            clusters[-1].append(item)
        else:
            clusters.append([item])

    values = np.array([np.mean([it[0] for it in cl]) for cl in clusters])
    # Force exact negation symmetry by mirroring the nonnegative half.
    n_pos = np.sum(values > tolerance)
    positive = values[-n_pos:] if n_pos else np.empty(0)
    frequencies = np.concatenate([-positive[::-1], [0.0], positive])

    sets: list[list[tuple[int, int]]] = [[] for _ in frequencies]
    for cl in clusters:
        for value, k, l in cl:
            i = int(np.argmin(np.abs(frequencies - value)))
            sets[i].append((k, l))
    return BohrGrid(
        frequencies=frequencies,
        index_sets=tuple(tuple(s) for s in sets),
        tolerance=tolerance,
    )


def bohr_grid(hamiltonian: SpectralDecomposition) -> BohrGrid:
    """All pairwise eigenvalue differences, deduplicated and symmetric."""
    return _bohr_grid_from_energies(hamiltonian.eigenvalues, hamiltonian.grouping_tolerance)


def reference_bohr_grid(ref: ReferenceState) -> BohrGrid:
    """Bohr grid of h = -ln(sigma) for a reference state."""
    return _bohr_grid_from_energies(ref.energies, ref.decomposition.grouping_tolerance)


@dataclass(frozen=True)
class DaviesInstance:
    """Hamiltonian, inverse temperature, weighted couplings and a filter.

    ``include_zero_frequency`` keeps the pure-dephasing omega = 0 jumps
    (the default); dropping them is an experimental switch that breaks jump
    completeness, so such instances cannot be embedded into a walk.
    """

    hamiltonian: SpectralDecomposition
    beta: float
    couplings: tuple[tuple[np.ndarray, float], ...]
    filter_kind: str = "metropolis"
    normalize_peak: bool = False
    include_zero_frequency: bool = True

    @property
    def dim(self) -> int:
        return self.hamiltonian.dim


def davies_instance(
    hamiltonian: SpectralDecomposition,
    beta: float,
    couplings,
    filter_kind: str = "metropolis",
    *,
    normalize_peak: bool = False,
    include_zero_frequency: bool = True,
) -> DaviesInstance:
    """Validate and freeze a Davies instance.

    Couplings must be hermitian, weights positive and summing to 1, the
    eigenvalues of H must lie in [0, 1], and the filter kind must be known.
    """
    if beta < 0:
        raise ValueError(f"inverse temperature must be nonnegative, got {beta}")
    if filter_kind not in FILTER_KINDS:
        raise ValueError(f"unknown filter {filter_kind!r}; choose from {FILTER_KINDS}")
    eps = hamiltonian.eigenvalues
    if eps[0] < -1e-12 or eps[-1] > 1.0 + 1e-12:
        raise ValueError(f"Hamiltonian eigenvalues must lie in [0, 1], got range [{eps[0]}, {eps[-1]}]")
    frozen = []
    total = 0.0
    for s, w in couplings:
        s = require_hermitian(np.asarray(s, dtype=complex), what="coupling operator")
        if s.shape[0] != hamiltonian.dim:
            raise ValueError("coupling dimension does not match the Hamiltonian")
        if w <= 0:
            raise ValueError(f"coupling weights must be positive, got {w}")
        frozen.append((s, float(w)))
        total += w
    if not frozen:
        raise ValueError("at least one coupling operator required")
    if abs(total - 1.0) > 1e-10:
        raise ValueError(f"coupling weights must sum to 1, got {total!r}")
    return DaviesInstance(
        hamiltonian=hamiltonian,
        beta=float(beta),
        couplings=tuple(frozen),
        filter_kind=filter_kind,
        normalize_peak=normalize_peak,
        include_zero_frequency=include_zero_frequency,
    )


def reflection_defect(s: np.ndarray) -> float:
    """Spectral norm of S^2 - I; zero for reflection couplings."""
    s = np.asarray(s, dtype=complex)
    return float(np.linalg.norm(s @ s - np.eye(s.shape[0]), 2))


def gibbs_state(hamiltonian: SpectralDecomposition, beta: float) -> ReferenceState:
    """Thermal state e^{-beta H} / Tr(e^{-beta H}) as a reference state.

    The spectral data is carried over from the Hamiltonian (sorting by
    weight and merging levels whose Gibbs weights coincide within the
    grouping tolerance), so no fresh eigendecomposition is involved.
    """
    if beta < 0:
        raise ValueError(f"inverse temperature must be nonnegative, got {beta}")
    eps = hamiltonian.eigenvalues
    ranks = np.array(hamiltonian.ranks)
    weights = np.exp(-beta * eps)
    z = float(np.sum(weights * ranks))
    probs = weights / z

    order = np.argsort(probs)
    tol = hamiltonian.grouping_tolerance
    merged: list[tuple[float, np.ndarray]] = []
    for i in order:
        p = float(probs[i])
        proj = hamiltonian.projectors[i]
        if merged and p - merged[-1][0] <= tol:
            prev_p, prev_proj = merged[-1]
            prev_rank = np.trace(prev_proj).real
            rank = np.trace(proj).real
            mean = (prev_p * prev_rank + p * rank) / (prev_rank + rank)
            merged[-1] = (float(mean), prev_proj + proj)
        else:
            merged.append((p, proj.copy()))

    dec = SpectralDecomposition(
        eigenvalues=np.array([p for p, _ in merged]),
        projectors=tuple(proj for _, proj in merged),
        grouping_tolerance=tol,
    )
    sigma = dec.matrix()
    h = matfunc(dec, lambda p: -np.log(p))
    return ReferenceState(sigma=sigma, decomposition=dec, hamiltonian=h)


def jump_operators(hamiltonian: SpectralDecomposition, s: np.ndarray) -> dict[float, np.ndarray]:
    """Fourier components of a coupling: omega -> sum_{J_omega} Pi_k S Pi_l.

    The components sum back to S, satisfy S(-omega) = S(omega)^dag, and for
    a reflection coupling also sum_omega S(omega)^dag S(omega) = I.
    """
    s = np.asarray(s, dtype=complex)
    if s.shape != (hamiltonian.dim, hamiltonian.dim):
        raise ValueError(f"coupling has shape {s.shape}, expected ({hamiltonian.dim}, {hamiltonian.dim})")
    grid = bohr_grid(hamiltonian)
    projs = hamiltonian.projectors
    out: dict[float, np.ndarray] = {}
    for freq, pairs in zip(grid.frequencies, grid.index_sets):
        component = np.zeros_like(s)
        for k, l in pairs:
            component += projs[k] @ s @ projs[l]
        out[float(freq)] = component
    return out


def filter_eval(kind: str, omega_h: float, *, normalize_peak: bool = False) -> float:
    """Transition rate at Bohr frequency ``omega_h`` of h = beta H.

    ``metropolis`` is min(1, e^{-omega}); ``glauber`` the logistic
    1 / (1 + e^{omega}), optionally doubled so the rate at omega = 0 is 1
    (``normalize_peak``; note the doubled variant exceeds 1 at negative
    frequencies and is rejected by the walk isometry).  Both satisfy
    G(omega) = e^{-omega} G(-omega) and decrease in beta for omega > 0.
    """
    if kind == "metropolis":
        return float(np.exp(-omega_h)) if omega_h > 0 else 1.0
    if kind == "glauber":
        value = float(expit(-omega_h))
        return 2.0 * value if normalize_peak else value
    raise ValueError(f"unknown filter {kind!r}; choose from {FILTER_KINDS}")


def davies_lindbladian(inst: DaviesInstance) -> CanonicalLindbladian:
    """Canonical form of the Davies generator for an instance.

    Each coupling becomes one canonical term whose jump at frequency
    beta * omega_H is the coupling component S(omega_H) with rate
    G(beta * omega_H).  Frequencies are snapped onto the Bohr grid of
    h = -ln(sigma); at beta = 0 all of them collapse onto 0 and the term
    legitimately carries several jumps with that label.
    """
    ref = gibbs_state(inst.hamiltonian, inst.beta)
    ref_grid = reference_bohr_grid(ref)
    grid_h = bohr_grid(inst.hamiltonian)
    snap_atol = max(ref_grid.tolerance, 1e-7)

    terms: list[CanonicalTerm] = []
    for s, weight in inst.couplings:
        jumps = jump_operators(inst.hamiltonian, s)
        pairs = []
        for omega_H in grid_h.frequencies:
            if omega_H < 0.0:
                continue
            if omega_H == 0.0 and not inst.include_zero_frequency:
                continue
            omega = ref_grid.snap(inst.beta * omega_H, atol=snap_atol)
            g_plus = filter_eval(inst.filter_kind, omega, normalize_peak=inst.normalize_peak)
            g_minus = filter_eval(inst.filter_kind, -omega, normalize_peak=inst.normalize_peak)
            pairs.append((omega, jumps[float(omega_H)], g_plus, g_minus))
        terms.append(canonical_term(weight, pairs))
    return CanonicalLindbladian(reference=ref, terms=tuple(terms))


def commutant_dimension(ops, *, dim: int | None = None, tol: float = 1e-10) -> int:
    """Dimension of the joint commutant {A : [A, M] = 0 for all M}.

    Computed as the nullspace dimension of the stacked vectorized
    commutator maps M (x) I - I (x) M^T.
    """
    ops = [np.asarray(m, dtype=complex) for m in ops]
    if not ops:
        if dim is None:
            raise ValueError("dimension required for an empty operator set")
        return dim * dim
    d = ops[0].shape[0]
    eye = np.eye(d)
    rows = [kron(m, eye) - kron(eye, m.T) for m in ops]
    stacked = np.vstack(rows)
    svals = np.linalg.svd(stacked, compute_uv=False)
    threshold = max(tol, svals[0] * max(stacked.shape) * np.finfo(float).eps)
    return int(np.sum(svals <= threshold))
