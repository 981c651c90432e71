import numpy as np
import pytest

from qrdr.dataset import holdout_split, make_rng
from qrdr.svm import (GAMMA_GRID, LssvmModel, accuracy, cross_validate,
                      decision_values, kernel_matrix, predict, r_sweep,
                      reduced_features, select_gamma, train_lssvm)


def _two_clusters(m_per_side=6, spread=0.1, seed=2):
    rng = make_rng(seed, 0)
    up = rng.normal(scale=spread, size=(m_per_side, 3)) + [3.0, 0.0, 0.0]
    dn = rng.normal(scale=spread, size=(m_per_side, 3)) - [3.0, 0.0, 0.0]
    X = np.vstack([up, dn])
    y = np.concatenate([np.ones(m_per_side), -np.ones(m_per_side)])
    return X, y


# ---------------------------------------------------------------------------
# kernel


def test_kernel_orthonormal_rows_give_identity():
    np.testing.assert_allclose(kernel_matrix(np.eye(4)), np.eye(4))


def test_kernel_duplicate_rows():
    X = np.array([[1.0, 2.0], [1.0, 2.0]])
    np.testing.assert_allclose(kernel_matrix(X), 5.0 * np.ones((2, 2)))


def test_kernel_matches_loop_oracle(rng):
    A = rng.normal(size=(5, 3))
    B = rng.normal(size=(4, 3))
    K = kernel_matrix(A, B)
    assert K.shape == (5, 4)
    for j in range(5):
        for k in range(4):
            assert K[j, k] == pytest.approx(np.dot(A[j], B[k]))
    np.testing.assert_allclose(kernel_matrix(A), A @ A.T)


# ---------------------------------------------------------------------------
# training


def test_train_mirror_pair_is_antisymmetric():
    X = np.array([[1.0, 2.0], [-1.0, -2.0]])
    model = train_lssvm(X, np.array([1.0, -1.0]), gamma=2.0)
    assert model.bias == pytest.approx(0.0, abs=1e-12)
    assert model.coefficients[0] == pytest.approx(-model.coefficients[1])
    np.testing.assert_array_equal(predict(model, X), [1, -1])


def test_train_single_class_predicts_it(rng):
    X = rng.normal(size=(5, 3))
    model = train_lssvm(X, np.ones(5), gamma=1.0)
    assert np.all(predict(model, rng.normal(size=(8, 3))) == 1)


def test_train_matches_block_elimination_solver(rng):
    # Schur-complement solution: eta = Om^-1 (y - b 1), b from the border
    X = rng.normal(size=(6, 4))
    y = np.array([1.0, -1.0, 1.0, 1.0, -1.0, -1.0])
    gamma = 3.0
    model = train_lssvm(X, y, gamma)
    om_inv = np.linalg.inv(X @ X.T + np.eye(6) / gamma)
    ones = np.ones(6)
    b = (ones @ om_inv @ y) / (ones @ om_inv @ ones)
    eta = om_inv @ (y - b * ones)
    assert model.bias == pytest.approx(b, abs=1e-10)
    np.testing.assert_allclose(model.coefficients, eta, atol=1e-10)


def test_train_residual_and_constraint(rng):
    X = rng.normal(size=(9, 5))
    y = np.sign(rng.normal(size=9)) + (rng.normal(size=9) == 0)
    model = train_lssvm(X, y, gamma=4.0)
    assert abs(model.coefficients.sum()) <= 1e-9
    system = np.zeros((10, 10))
    system[0, 1:] = 1.0
    system[1:, 0] = 1.0
    system[1:, 1:] = X @ X.T + np.eye(9) / 4.0
    sol = np.concatenate([[model.bias], model.coefficients])
    rhs = np.concatenate([[0.0], y])
    assert np.linalg.norm(system @ sol - rhs) <= 1e-8 * np.linalg.norm(y)


def test_train_validation_errors(rng):
    X = rng.normal(size=(4, 2))
    with pytest.raises(ValueError, match="gamma"):
        train_lssvm(X, np.ones(4), gamma=0.0)
    with pytest.raises(ValueError, match="align"):
        train_lssvm(X, np.ones(3), gamma=1.0)


# ---------------------------------------------------------------------------
# prediction


def test_interpolating_fit_memorizes_labels(rng):
    X = rng.normal(size=(10, 6))
    y = np.where(rng.normal(size=10) > 0, 1.0, -1.0)
    model = train_lssvm(X, y, gamma=1e6)
    assert accuracy(model, X, y) == 1.0


def test_decision_values_shape_and_single_row():
    X, y = _two_clusters()
    model = train_lssvm(X, y, gamma=1.0)
    vals = decision_values(model, X[:3])
    assert vals.shape == (3,)
    assert decision_values(model, X[0])[0] == pytest.approx(vals[0])


def test_predict_tie_resolves_positive():
    model = LssvmModel(support=np.zeros((1, 2)),
                       coefficients=np.zeros(1), bias=0.0, gamma=1.0)
    np.testing.assert_array_equal(predict(model, np.ones((3, 2))), [1, 1, 1])


# ---------------------------------------------------------------------------
# gamma selection and cross-validation


def test_select_gamma_tie_takes_smallest():
    X, y = _two_clusters()
    assert select_gamma(X, y) == GAMMA_GRID[0] == 0.5


def test_cross_validate_separable_is_perfect():
    X, y = _two_clusters()
    res = cross_validate(X, y, k=4)
    assert res.mean_accuracy == 1.0
    assert np.all(res.fold_accuracies == 1.0)
    assert all(g in GAMMA_GRID for g in res.chosen_gammas)
    m = res.to_metrics()
    assert m["k"] == 4 and len(m["fold_accuracies"]) == 4


def test_cross_validate_warns_on_single_class_fold():
    X = np.vstack([np.eye(5)[:4] + 2.0, [[-2.0, -2.0, 0.0, 0.0, 0.0]]])[:, :3]
    X = np.ascontiguousarray(X)
    y = np.array([1.0, 1.0, 1.0, 1.0, -1.0])
    with pytest.warns(UserWarning, match="single class"):
        cross_validate(X, y, k=5, inner_k=2)


def test_cross_validate_sonar_raw_regression(sonar):
    res = cross_validate(sonar.features, sonar.labels)
    assert res.mean_accuracy == pytest.approx(0.75, abs=1e-9)
    assert res.fold_accuracies[1] == pytest.approx(15 / 26, abs=1e-12)


def test_cross_validate_sonar_reduced_regression(sonar):
    Z = reduced_features(sonar.features, 16)
    res = cross_validate(Z, sonar.labels)
    assert res.mean_accuracy == pytest.approx(0.7403846153846154, abs=1e-9)


# ---------------------------------------------------------------------------
# rank sweep


def test_reduced_features_nested_and_isometric(sonar_features):
    Z32 = reduced_features(sonar_features, 32)
    Z16 = reduced_features(sonar_features, 16)
    np.testing.assert_allclose(Z32[:, :16], Z16, atol=1e-10)
    Z60 = reduced_features(sonar_features, 60)
    np.testing.assert_allclose(kernel_matrix(Z60), kernel_matrix(sonar_features),
                               atol=1e-8)


def test_r_sweep_shapes_and_metrics():
    X, y = _two_clusters(m_per_side=12)
    res = r_sweep(X, y, ranks=(2, 3), reps=3, test_count=4, seed=5)
    assert res.rep_accuracies.shape == (2, 3)
    np.testing.assert_allclose(res.mean_accuracies,
                               res.rep_accuracies.mean(axis=1))
    m = res.to_metrics()
    assert m["ranks"] == [2, 3]
    assert m["min_accuracies"] == [min(r) for r in m["rep_accuracies"]]
    assert m["max_accuracies"] == [max(r) for r in m["rep_accuracies"]]
    assert m["reps"] == 3 and m["test_count"] == 4


def test_r_sweep_rejects_bad_ranks():
    X, y = _two_clusters(m_per_side=8)   # 3 features
    with pytest.raises(ValueError, match="power of two"):
        r_sweep(X, y, ranks=(2, 5), reps=2, test_count=3)
    with pytest.raises(ValueError, match="power of two"):
        r_sweep(X, y, ranks=(1,), reps=2, test_count=3)
    with pytest.raises(ValueError, match="power of two"):
        r_sweep(X, y, ranks=(4,), reps=2, test_count=3)


def test_r_sweep_full_rank_equals_raw_holdout():
    # projecting onto all N components is an isometry: accuracy must match
    # training directly on the raw features, split by split
    X, y = _two_clusters(m_per_side=10, spread=2.4, seed=9)
    res = r_sweep(X, y, ranks=(2, 3), reps=4, test_count=5, seed=11)
    for rep in range(4):
        tr, te = holdout_split(20, 5, 11, rep)
        gamma = select_gamma(X[tr], y[tr], seed=11, stream=200 + rep)
        model = train_lssvm(X[tr], y[tr], gamma)
        assert res.rep_accuracies[1, rep] == accuracy(model, X[te], y[te])
