"""Classical principal-component oracle.

Works on the uncentred second-moment matrix A = X^T X of a dataset whose
rows are samples.  The eigensystem of A fixes everything the resonant
reduction needs: the top-R spectrum (resonance targets), the eigenbasis
(disentangling directions), the minimal spectral gap (admissibility of the
coupling strength), and the ideal reduced state used as the fidelity
reference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# adjacent eigenvalues closer than this are reported as degenerate
DEGENERACY_ATOL = 1e-9


def covariance(X: np.ndarray) -> np.ndarray:
    """Uncentred covariance-like matrix A = X^T X (features x features)."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be 2-D (samples x features)")
    return X.T @ X


def _fix_signs(V: np.ndarray) -> np.ndarray:
    # orient each eigenvector so its largest-magnitude component is positive
    # (ties broken by the lowest index, which argmax already picks)
    V = V.copy()
    lead = np.argmax(np.abs(V), axis=0)
    flip = V[lead, np.arange(V.shape[1])] < 0
    V[:, flip] *= -1.0
    return V


@dataclass
class PcaModel:
    """Eigensystem of A = X^T X with the reduction rank R attached.

    ``eigenvalues`` are descending; ``components[:, k]`` is the k-th
    principal direction, sign-fixed so the largest-magnitude entry is
    positive.  ``degenerate_pairs`` lists adjacent indices (k, k+1), 0-based,
    with an eigenvalue spacing below ``DEGENERACY_ATOL``.
    """

    eigenvalues: np.ndarray
    components: np.ndarray
    rank: int
    frobenius_norm: float
    degenerate_pairs: list = field(default_factory=list)

    @property
    def n_features(self) -> int:
        return self.components.shape[0]

    @property
    def boundary_degenerate(self) -> bool:
        """True when the spectrum is degenerate across the R-boundary."""
        return self.rank < self.n_features and (self.rank - 1, self.rank) in set(
            self.degenerate_pairs
        )

    def variance_fraction(self, rank: int | None = None) -> float:
        """Fraction of total variance carried by the top eigenvalues."""
        r = self.rank if rank is None else rank
        total = float(np.sum(self.eigenvalues))
        if total <= 0:
            raise ValueError("total variance is zero")
        return float(np.sum(self.eigenvalues[:r]) / total)

    @property
    def delta_min(self) -> float:
        """Smallest detuning protecting the resonant transitions.

        Off-resonant leakage couples every populated eigenvalue sector to
        each of the R target levels, so the minimum runs over adjacent gaps
        among the top R+1 eigenvalues (the level just past the boundary is
        the nearest contaminant) and over the distance from the last target
        level down to the zero levels of padded sectors.
        """
        lam = self.eigenvalues
        lead = lam[: min(self.rank + 1, lam.size)]
        gaps = [lam[self.rank - 1]]  # padded sectors sit at eigenvalue 0
        if lead.size > 1:
            gaps.extend(np.diff(lead) * -1.0)
        return float(min(gaps))


def fit_pca(X: np.ndarray, rank: int) -> PcaModel:
    """Eigendecompose A = X^T X and package the top-``rank`` description."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be 2-D (samples x features)")
    n = X.shape[1]
    if not 1 <= rank <= n:
        raise ValueError(f"rank must be in [1, {n}], got {rank}")
    values, vectors = np.linalg.eigh(covariance(X))
    order = np.argsort(values)[::-1]
    values = values[order]
    vectors = _fix_signs(vectors[:, order])
    pairs = [
        (k, k + 1)
        for k in range(n - 1)
        if values[k] - values[k + 1] <= DEGENERACY_ATOL
    ]
    return PcaModel(
        eigenvalues=values,
        components=vectors,
        rank=rank,
        frobenius_norm=float(np.linalg.norm(X)),
        degenerate_pairs=pairs,
    )


def project(X: np.ndarray, model: PcaModel) -> np.ndarray:
    """Project sample rows onto the top-R principal directions."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        return X @ model.components[:, : model.rank]
    if X.shape[1] != model.n_features:
        raise ValueError(
            f"feature count {X.shape[1]} does not match model ({model.n_features})"
        )
    return X @ model.components[:, : model.rank]


def target_state(X: np.ndarray, model: PcaModel, r_qubits: int | None = None) -> np.ndarray:
    """Ideal joint reduced state over (component register, sample register).

    The amplitude of |j>|i> is proportional to the projection of sample i
    onto component j; the vector is unit-normalised.  The component register
    holds ``r_qubits`` qubits (default: just enough for R values), so indices
    j >= R carry zeros; the flattened index is j * M + i.
    """
    Z = project(X, model)
    m, rank = Z.shape
    if r_qubits is None:
        r_qubits = max(1, math.ceil(math.log2(rank))) if rank > 1 else 1
    dim_r = 2 ** r_qubits
    if dim_r < rank:
        raise ValueError(f"2^{r_qubits} register cannot hold {rank} components")
    out = np.zeros(dim_r * m)
    out[: rank * m] = Z.T.reshape(-1)
    norm = np.linalg.norm(out)
    if norm == 0:
        raise ValueError("projections vanish; cannot form a target state")
    return out / norm
