"""Least-squares SVM classifier and its evaluation protocols.

The classifier solves the dual system

    [ 0    1^T          ] [ b   ]   [ 0 ]
    [ 1    K + I/gamma  ] [ eta ] = [ y ]

with the linear kernel K_jk = x_j . x_k, and predicts sign(sum_j eta_j
x_j . x + b).  Evaluation follows two protocols: seeded k-fold
cross-validation with nested gamma selection, and repeated random holdout
used to trace accuracy against the reduction rank.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .dataset import holdout_split, kfold_split
from .pca import fit_pca, project

GAMMA_GRID = (0.5, 1.0, 2.0, 4.0, 8.0, 16.0)


def kernel_matrix(A: np.ndarray, B: np.ndarray | None = None) -> np.ndarray:
    """Linear kernel Gram matrix K[j, k] = A[j] . B[k]."""
    A = np.asarray(A, dtype=float)
    B = A if B is None else np.asarray(B, dtype=float)
    return A @ B.T


@dataclass
class LssvmModel:
    support: np.ndarray       # training features, one row per sample
    coefficients: np.ndarray  # eta
    bias: float
    gamma: float


def train_lssvm(X: np.ndarray, y: np.ndarray, gamma: float) -> LssvmModel:
    """Fit the least-squares SVM by solving the bordered kernel system."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    m = X.shape[0]
    if y.shape != (m,):
        raise ValueError("labels must align with feature rows")
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    system = np.zeros((m + 1, m + 1))
    system[0, 1:] = 1.0
    system[1:, 0] = 1.0
    system[1:, 1:] = kernel_matrix(X) + np.eye(m) / gamma
    rhs = np.concatenate([[0.0], y])
    try:
        sol = np.linalg.solve(system, rhs)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"LS-SVM system is singular: {exc}") from exc
    return LssvmModel(support=X, coefficients=sol[1:], bias=float(sol[0]),
                      gamma=float(gamma))


def decision_values(model: LssvmModel, X: np.ndarray) -> np.ndarray:
    return kernel_matrix(np.atleast_2d(np.asarray(X, dtype=float)),
                         model.support) @ model.coefficients + model.bias


def predict(model: LssvmModel, X: np.ndarray) -> np.ndarray:
    """Class labels +/-1; ties (decision value 0) resolve to +1."""
    return np.where(decision_values(model, X) >= 0.0, 1, -1)


def accuracy(model: LssvmModel, X: np.ndarray, y: np.ndarray) -> float:
    return float(np.mean(predict(model, X) == np.asarray(y)))


def select_gamma(X: np.ndarray, y: np.ndarray, gammas=GAMMA_GRID,
                 inner_k: int = 4, seed: int = 7, stream: int = 0) -> float:
    """Pick gamma by inner cross-validation; ties go to the smallest value."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    folds = kfold_split(X.shape[0], inner_k, seed, stream=stream)
    scores = []
    for gamma in gammas:
        accs = [
            accuracy(train_lssvm(X[tr], y[tr], gamma), X[te], y[te])
            for tr, te in folds
        ]
        scores.append(np.mean(accs))
    return float(gammas[int(np.argmax(scores))])


@dataclass
class CvResult:
    fold_accuracies: np.ndarray
    chosen_gammas: np.ndarray
    mean_accuracy: float
    k: int
    seed: int

    def to_metrics(self) -> dict:
        return {
            "k": self.k,
            "seed": self.seed,
            "fold_accuracies": [float(a) for a in self.fold_accuracies],
            "chosen_gammas": [float(g) for g in self.chosen_gammas],
            "mean_accuracy": self.mean_accuracy,
        }


def cross_validate(X: np.ndarray, y: np.ndarray, k: int = 8, seed: int = 7,
                   gammas=GAMMA_GRID, inner_k: int = 4) -> CvResult:
    """k-fold accuracy with gamma chosen by nested CV inside each fold."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    folds = kfold_split(X.shape[0], k, seed)
    accs = np.empty(k)
    gams = np.empty(k)
    for i, (tr, te) in enumerate(folds):
        if np.unique(y[tr]).size < 2:
            warnings.warn(
                f"fold {i}: training data contains a single class; the fold "
                "is still evaluated", stacklevel=2,
            )
        gamma = select_gamma(X[tr], y[tr], gammas=gammas, inner_k=inner_k,
                             seed=seed, stream=100 + i)
        model = train_lssvm(X[tr], y[tr], gamma)
        accs[i] = accuracy(model, X[te], y[te])
        gams[i] = gamma
    return CvResult(fold_accuracies=accs, chosen_gammas=gams,
                    mean_accuracy=float(accs.mean()), k=k, seed=seed)


def reduced_features(X: np.ndarray, rank: int) -> np.ndarray:
    """Project the whole dataset onto its top principal components.

    The projection basis is fit on the full dataset before any splitting,
    matching the evaluation protocol of the downstream comparisons.
    """
    return project(X, fit_pca(X, rank))


@dataclass
class RSweepResult:
    ranks: list
    mean_accuracies: np.ndarray
    rep_accuracies: np.ndarray  # (len(ranks), reps)
    reps: int
    test_count: int
    seed: int

    def to_metrics(self) -> dict:
        return {
            "ranks": list(self.ranks),
            "mean_accuracies": [float(a) for a in self.mean_accuracies],
            "min_accuracies": [float(a) for a in self.rep_accuracies.min(axis=1)],
            "max_accuracies": [float(a) for a in self.rep_accuracies.max(axis=1)],
            "rep_accuracies": [[float(a) for a in row]
                               for row in self.rep_accuracies],
            "reps": self.reps,
            "test_count": self.test_count,
            "seed": self.seed,
        }


def r_sweep(X: np.ndarray, y: np.ndarray, ranks=(4, 8, 16, 32), reps: int = 8,
            test_count: int = 20, seed: int = 7, gammas=GAMMA_GRID,
            inner_k: int = 4) -> RSweepResult:
    """Accuracy versus reduction rank under repeated random holdout.

    For every rank, the dataset is projected onto its top components, then
    ``reps`` random holdout splits (``test_count`` test samples each) are
    scored with nested gamma selection on the training part.  All splits
    are shared across ranks so the comparison is paired.  Ranks must be
    powers of two in [2, N]; the full dimension N is also allowed as the
    isometric reference point (it cannot change the linear kernel).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    m, n_feat = X.shape
    for rank in ranks:
        power_of_two = rank >= 2 and (rank & (rank - 1)) == 0
        if not ((power_of_two and rank <= n_feat) or rank == n_feat):
            raise ValueError(
                f"rank {rank} must be a power of two in [2, {n_feat}] "
                f"(or exactly {n_feat})"
            )
    Z_full = reduced_features(X, max(ranks))
    splits = [holdout_split(m, test_count, seed, rep) for rep in range(reps)]
    rep_accs = np.empty((len(ranks), reps))
    for ri, rank in enumerate(ranks):
        Z = Z_full[:, :rank]
        for rep, (tr, te) in enumerate(splits):
            gamma = select_gamma(Z[tr], y[tr], gammas=gammas, inner_k=inner_k,
                                 seed=seed, stream=200 + rep)
            model = train_lssvm(Z[tr], y[tr], gamma)
            rep_accs[ri, rep] = accuracy(model, Z[te], y[te])
    return RSweepResult(
        ranks=list(ranks),
        mean_accuracies=rep_accs.mean(axis=1),
        rep_accuracies=rep_accs,
        reps=reps,
        test_count=test_count,
        seed=seed,
    )
