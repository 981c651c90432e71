"""Dense linear-algebra primitives shared by the simulator modules.

Everything here is a thin, validated layer over ``numpy.linalg``: Hermitian
eigendecompositions, spectral time evolution exp(-i H t) |psi>, Kronecker
products over operator lists, and reduced SVD.  All operators are dense
``numpy`` arrays; no sparse formats are used anywhere in the package.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Absolute tolerance for Hermiticity / unitarity checks on O(1)-normalised
# operators, and the default relative tolerance for reconstruction checks.
HERMITICITY_ATOL = 1e-10
RECONSTRUCTION_RTOL = 1e-12


def kron_all(ops) -> np.ndarray:
    """Kronecker product of a sequence of operators, left to right.

    ``kron_all([A, B, C])`` is ``A (x) B (x) C``; a single operator is
    returned unchanged (as an array).
    """
    ops = [np.asarray(op) for op in ops]
    if not ops:
        raise ValueError("kron_all needs at least one operator")
    out = ops[0]
    for op in ops[1:]:
        out = np.kron(out, op)
    return out


def is_hermitian(H: np.ndarray, atol: float = HERMITICITY_ATOL) -> bool:
    H = np.asarray(H)
    scale = max(1.0, float(np.abs(H).max(initial=0.0)))
    return bool(np.abs(H - H.conj().T).max(initial=0.0) <= atol * scale)


@dataclass
class SpectralDecomposition:
    """Eigensystem of a Hermitian operator.

    ``values`` are real and ascending, ``vectors[:, k]`` is the eigenvector
    for ``values[k]``, so ``H = vectors @ diag(values) @ vectors.conj().T``.
    """

    values: np.ndarray
    vectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ self.vectors.conj().T


def hermitian_eig(H: np.ndarray, check: bool = True) -> SpectralDecomposition:
    """Eigendecomposition of a Hermitian matrix with an explicit input check.

    Raises ``ValueError`` when the input is not Hermitian within
    ``HERMITICITY_ATOL`` (relative to the largest entry), instead of silently
    symmetrising the way ``eigh`` would.
    """
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {H.shape}")
    if check and not is_hermitian(H):
        dev = np.abs(H - H.conj().T).max()
        raise ValueError(f"matrix is not Hermitian (max deviation {dev:.3e})")
    values, vectors = np.linalg.eigh(H)
    return SpectralDecomposition(values=values, vectors=vectors)


def evolve_spectral(decomp: SpectralDecomposition | np.ndarray, t: float,
                    psi: np.ndarray) -> np.ndarray:
    """Apply exp(-i H t) to ``psi`` through the eigenbasis of H.

    ``decomp`` may be a precomputed :class:`SpectralDecomposition` (reused
    across many times / states) or the Hermitian matrix itself.  ``psi`` may
    be a vector or a matrix of column states.
    """
    if not isinstance(decomp, SpectralDecomposition):
        decomp = hermitian_eig(decomp)
    psi = np.asarray(psi)
    phases = np.exp(-1j * decomp.values * t)
    coeffs = decomp.vectors.conj().T @ psi
    if coeffs.ndim == 1:
        return decomp.vectors @ (phases * coeffs)
    return decomp.vectors @ (phases[:, None] * coeffs)


def evolution_operator(decomp: SpectralDecomposition | np.ndarray,
                       t: float) -> np.ndarray:
    """Dense unitary exp(-i H t)."""
    if not isinstance(decomp, SpectralDecomposition):
        decomp = hermitian_eig(decomp)
    phases = np.exp(-1j * decomp.values * t)
    return (decomp.vectors * phases) @ decomp.vectors.conj().T


@dataclass
class SvdResult:
    """Reduced SVD ``X = U @ diag(singular_values) @ Vt``."""

    U: np.ndarray
    singular_values: np.ndarray
    Vt: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.U * self.singular_values) @ self.Vt


def reduced_svd(X: np.ndarray) -> SvdResult:
    """Thin SVD with singular values in descending order."""
    U, s, Vt = np.linalg.svd(np.asarray(X), full_matrices=False)
    return SvdResult(U=U, singular_values=s, Vt=Vt)
