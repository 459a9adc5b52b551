"""Dense complex matrix/vector primitives.

Everything downstream works with plain ``numpy`` arrays of ``complex128``.
This module fixes the two conventions the rest of the package depends on:

* vectorization is row-major, ``vec(|i><j|) = |i> (x) |j>``, so that
  ``vec(A B C) = (A (x) C^T) vec(B)``;
* hermitian eigendecompositions group eigenvalues that agree within a
  tolerance into a single orthogonal projector, so degenerate spectra are
  handled exactly instead of as accidental near-duplicates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "DEFAULT_GROUPING_TOL",
    "SpectralDecomposition",
    "kron",
    "vec",
    "unvec",
    "dagger",
    "hermiticity_defect",
    "require_hermitian",
    "eig_hermitian",
    "matfunc",
    "matrix_to_json",
    "matrix_from_json",
]

# Far above eigensolver noise (~1e-14 * d) and far below any physically
# distinct gap at desk scale (d <= 16).
DEFAULT_GROUPING_TOL = 1e-9

_HERMITICITY_RTOL = 1e-12


def dagger(a: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return a.conj().T


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Tensor (Kronecker) product; dimensions multiply."""
    return np.kron(np.asarray(a), np.asarray(b))


def vec(a: np.ndarray) -> np.ndarray:
    """Row-major vectorization: vec(|i><j|) = |i> (x) |j>."""
    return np.asarray(a).reshape(-1)


def unvec(v: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """Inverse of :func:`vec`; requires ``len(v) == rows * cols``."""
    v = np.asarray(v)
    if v.size != rows * cols:
        raise ValueError(f"cannot reshape length-{v.size} vector to {rows}x{cols}")
    return v.reshape(rows, cols)


def hermiticity_defect(a: np.ndarray) -> float:
    """Spectral norm of A - A^dag."""
    return float(np.linalg.norm(a - dagger(a), 2))


def require_hermitian(a: np.ndarray, *, what: str = "matrix") -> np.ndarray:
    """Return ``a`` if hermitian up to roundoff, else raise ``ValueError``.

    The threshold is relative: ``|A - A^dag| <= 1e-12 * max(1, |A|)``.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{what} must be square, got shape {a.shape}")
    defect = hermiticity_defect(a)
    scale = max(1.0, float(np.linalg.norm(a, 2)))
    if defect > _HERMITICITY_RTOL * scale:
        raise ValueError(f"{what} is not hermitian: |A - A^dag| = {defect:.3e}")
    return a


@dataclass(frozen=True)
class SpectralDecomposition:
    """A hermitian matrix as ``sum_k eigenvalues[k] * projectors[k]``.

    Eigenvalues are strictly increasing; each projector is the orthogonal
    projector onto the full eigenspace of its (possibly degenerate) cluster,
    so the projectors are mutually orthogonal and sum to the identity.
    """

    eigenvalues: np.ndarray
    projectors: tuple[np.ndarray, ...]
    grouping_tolerance: float = DEFAULT_GROUPING_TOL

    def __post_init__(self) -> None:
        object.__setattr__(self, "eigenvalues", np.asarray(self.eigenvalues, dtype=float))
        object.__setattr__(
            self, "projectors", tuple(np.asarray(p, dtype=complex) for p in self.projectors)
        )
        if len(self.eigenvalues) != len(self.projectors):
            raise ValueError("one projector per eigenvalue cluster required")
        if len(self.eigenvalues) == 0:
            raise ValueError("empty decomposition")
        if np.any(np.diff(self.eigenvalues) <= self.grouping_tolerance):
            raise ValueError("eigenvalues must be strictly increasing beyond the grouping tolerance")

    @property
    def dim(self) -> int:
        return self.projectors[0].shape[0]

    @property
    def ranks(self) -> tuple[int, ...]:
        return tuple(int(round(np.trace(p).real)) for p in self.projectors)

    def matrix(self) -> np.ndarray:
        """Reconstruct ``sum_k e_k P_k``."""
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for e, p in zip(self.eigenvalues, self.projectors):
            out += e * p
        return out


def eig_hermitian(
    a: np.ndarray, grouping_tolerance: float = DEFAULT_GROUPING_TOL
) -> SpectralDecomposition:
    """Eigendecomposition of a hermitian matrix with degeneracy grouping.

    Eigenvalues closer than ``grouping_tolerance`` (by consecutive linkage)
    are merged into one cluster; the cluster projector is the sum of the
    outer products of its eigenvectors, re-symmetrized to suppress roundoff.
    """
    a = require_hermitian(a)
    w, v = np.linalg.eigh((a + dagger(a)) / 2.0)

    clusters: list[list[int]] = [[0]]
    for i in range(1, len(w)):
        if w[i] - w[clusters[-1][-1]] <= grouping_tolerance:
            clusters[-1].append(i)
        else:
            clusters.append([i])

    eigenvalues = []
    projectors = []
    for idx in clusters:
        block = v[:, idx]
        proj = block @ dagger(block)
        proj = (proj + dagger(proj)) / 2.0
        eigenvalues.append(float(np.mean(w[idx])))
        projectors.append(proj)

    dec = SpectralDecomposition(np.array(eigenvalues), tuple(projectors), grouping_tolerance)
    residual = np.linalg.norm(dec.matrix() - a, 2)
    if residual > 1e-9 * max(1.0, float(np.linalg.norm(a, 2))):
        raise ValueError(f"spectral reconstruction failed, residual {residual:.3e}")
    return dec


def matfunc(dec: SpectralDecomposition, f: Callable[[float], float]) -> np.ndarray:
    """Apply a scalar function spectrally: ``sum_k f(e_k) P_k``.

    Raises ``ValueError`` if ``f`` is undefined or non-finite at an
    eigenvalue (for example ``log`` at 0).
    """
    out = np.zeros((dec.dim, dec.dim), dtype=complex)
    for e, p in zip(dec.eigenvalues, dec.projectors):
        try:
            with np.errstate(divide="raise", invalid="raise", over="raise"):
                value = f(float(e))
        except (ValueError, ArithmeticError) as exc:
            raise ValueError(f"matrix function undefined at eigenvalue {e!r}: {exc}") from exc
        if not np.isfinite(value):
            raise ValueError(f"matrix function non-finite at eigenvalue {e!r}: {value!r}")
        out += value * p
    return out


def matrix_to_json(a: np.ndarray) -> list:
    """Complex matrix as nested row-major lists of [re, im] pairs."""
    a = np.asarray(a, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in a]


def matrix_from_json(data: Sequence, *, expect_shape: tuple[int, int] | None = None) -> np.ndarray:
    """Inverse of :func:`matrix_to_json`, with optional shape validation."""
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"malformed complex matrix payload: {exc}") from exc
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise ValueError(f"complex matrix payload must be rows x cols x [re, im], got shape {arr.shape}")
    out = arr[..., 0] + 1j * arr[..., 1]
    if expect_shape is not None and out.shape != expect_shape:
        raise ValueError(f"matrix has shape {out.shape}, expected {expect_shape}")
    return out
