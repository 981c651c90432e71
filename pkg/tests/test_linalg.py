import numpy as np
import pytest

from qrdr.linalg import (SpectralDecomposition, evolution_operator,
                         evolve_spectral, hermitian_eig, is_hermitian,
                         kron_all, reduced_svd)

SIGMA_Y = np.array([[0, -1j], [1j, 0]])
SIGMA_Z = np.diag([1.0, -1.0])


def test_kron_identity():
    assert np.array_equal(kron_all([np.eye(2), np.eye(2)]), np.eye(4))


def test_kron_sigma_y_blocks():
    K = kron_all([SIGMA_Y, np.eye(2)])
    expect = np.zeros((4, 4), dtype=complex)
    expect[:2, 2:] = -1j * np.eye(2)
    expect[2:, :2] = 1j * np.eye(2)
    assert np.array_equal(K, expect)


def test_kron_matches_entrywise_definition(rng):
    A = rng.normal(size=(2, 2))
    B = rng.normal(size=(3, 3))
    K = kron_all([A, B])
    for i in range(6):
        for j in range(6):
            assert K[i, j] == A[i // 3, j // 3] * B[i % 3, j % 3]


def test_kron_associative(rng):
    A, B, C = (rng.normal(size=(2, 2)) for _ in range(3))
    left = kron_all([kron_all([A, B]), C])
    right = kron_all([A, kron_all([B, C])])
    np.testing.assert_allclose(left, right, atol=1e-13)


def test_kron_single_and_empty():
    A = np.ones((2, 2))
    assert np.array_equal(kron_all([A]), A)
    with pytest.raises(ValueError):
        kron_all([])


def test_is_hermitian():
    assert is_hermitian(SIGMA_Y)
    assert not is_hermitian(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_eig_diagonal():
    d = hermitian_eig(np.diag([3.0, 1.0]))
    np.testing.assert_allclose(d.values, [1.0, 3.0])
    # eigenvectors are basis states, up to sign
    assert abs(abs(d.vectors[1, 0]) - 1.0) < 1e-14
    assert abs(abs(d.vectors[0, 1]) - 1.0) < 1e-14


def test_eig_pauli_z_spectrum():
    d = hermitian_eig(SIGMA_Z)
    np.testing.assert_allclose(d.values, [-1.0, 1.0])


def test_eig_reconstruction(rng):
    raw = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    H = (raw + raw.conj().T) / 2
    d = hermitian_eig(H)
    assert np.abs(d.reconstruct() - H).max() <= 1e-10


def test_eig_rejects_non_hermitian(rng):
    with pytest.raises(ValueError, match="not Hermitian"):
        hermitian_eig(rng.normal(size=(4, 4)))
    with pytest.raises(ValueError, match="square"):
        hermitian_eig(np.zeros((2, 3)))


def _taylor_evolution(H, t, psi, terms=25):
    # truncated series for exp(-i H t) psi, independent of any eigensolver
    out = psi.astype(complex)
    term = psi.astype(complex)
    for k in range(1, terms):
        term = (-1j * t / k) * (H @ term)
        out = out + term
    return out


def test_evolve_zero_generator(rng):
    psi = rng.normal(size=4)
    out = evolve_spectral(np.zeros((4, 4)), 2.7, psi)
    np.testing.assert_allclose(out, psi, atol=1e-14)


def test_evolve_sigma_y_rotation():
    # exp(-i sigma_y t)|0> = cos(t)|0> + sin(t)|1>; t = pi/4
    out = evolve_spectral(SIGMA_Y, np.pi / 4, np.array([1.0, 0.0]))
    np.testing.assert_allclose(out, [np.cos(np.pi / 4), np.sin(np.pi / 4)],
                               atol=1e-12)


def test_evolve_matches_taylor_series(rng):
    raw = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
    H = (raw + raw.conj().T) / 2
    psi = rng.normal(size=16) + 1j * rng.normal(size=16)
    psi /= np.linalg.norm(psi)
    out = evolve_spectral(H, 0.3, psi)
    assert np.abs(out - _taylor_evolution(H, 0.3, psi)).max() <= 1e-8


def test_evolve_accepts_decomposition_and_columns(rng):
    raw = rng.normal(size=(6, 6))
    H = (raw + raw.T) / 2
    d = hermitian_eig(H)
    cols = rng.normal(size=(6, 3))
    out = evolve_spectral(d, 0.5, cols)
    for j in range(3):
        np.testing.assert_allclose(out[:, j],
                                   evolve_spectral(H, 0.5, cols[:, j]),
                                   atol=1e-12)


def test_evolution_operator_unitary(rng):
    raw = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    H = (raw + raw.conj().T) / 2
    U = evolution_operator(H, 1.3)
    np.testing.assert_allclose(U @ U.conj().T, np.eye(5), atol=1e-12)


def test_svd_diagonal():
    res = reduced_svd(np.diag([2.0, 1.0]))
    np.testing.assert_allclose(res.singular_values, [2.0, 1.0])


def test_svd_rank_one(rng):
    u = rng.normal(size=5)
    v = rng.normal(size=3)
    s = reduced_svd(np.outer(u, v)).singular_values
    assert s[0] == pytest.approx(np.linalg.norm(u) * np.linalg.norm(v))
    np.testing.assert_allclose(s[1:], 0.0, atol=1e-12)


def test_svd_squares_match_gram_eigenvalues(rng):
    X = rng.normal(size=(6, 4))
    s = reduced_svd(X).singular_values
    lam = np.sort(hermitian_eig(X.T @ X).values)[::-1]
    np.testing.assert_allclose(s ** 2, lam, atol=1e-9)


def test_svd_reconstruct(rng):
    X = rng.normal(size=(5, 7))
    np.testing.assert_allclose(reduced_svd(X).reconstruct(), X, atol=1e-12)


def test_spectral_decomposition_dim():
    d = SpectralDecomposition(values=np.zeros(3), vectors=np.eye(3))
    assert d.dim == 3
