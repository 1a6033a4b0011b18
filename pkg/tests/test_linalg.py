import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kspectral.errors import InputError, NoConvergence, NotHermitian, NotPositiveDefinite, Singular
from kspectral import linalg
from kspectral.linalg import (
    direct_sum, hermitian_eigen, inv, matrix_sqrt_hpd, poly_eval_matrix, resolvent, solve, spectral_norm,
)

from conftest import J2, crandn, seeded_matrices


def random_hermitian(rng, n):
    g = crandn(rng, n, n)
    return g + g.conj().T


# hermitian_eigen


@pytest.mark.parametrize("method", ["lapack", "jacobi"])
def test_eigen_diagonal(method):
    vals, vecs = hermitian_eigen(np.diag([2.0, 1.0]), method)
    np.testing.assert_allclose(vals, [1, 2], atol=1e-14)
    np.testing.assert_allclose(np.abs(vecs), [[0, 1], [1, 0]], atol=1e-14)


@pytest.mark.parametrize("method", ["lapack", "jacobi"])
def test_eigen_swap(method):
    vals, _ = hermitian_eigen(np.array([[0, 1], [1, 0]]), method)
    np.testing.assert_allclose(vals, [-1, 1], atol=1e-14)


@pytest.mark.parametrize("method", ["lapack", "jacobi"])
def test_eigen_reconstruction_6x6(rng, method):
    h = random_hermitian(rng, 6)
    vals, v = hermitian_eigen(h, method)
    assert np.all(np.diff(vals) >= 0)
    np.testing.assert_allclose(v @ np.diag(vals) @ v.conj().T, h, atol=1e-10)
    np.testing.assert_allclose(v.conj().T @ v, np.eye(6), atol=1e-10)


def test_jacobi_agrees_with_lapack(rng):
    h = random_hermitian(rng, 12)
    a = hermitian_eigen(h, "jacobi").values
    b = hermitian_eigen(h, "lapack").values
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_eigen_rejects_non_hermitian():
    with pytest.raises(NotHermitian):
        hermitian_eigen(J2)


def test_jacobi_sweep_budget(monkeypatch, rng):
    monkeypatch.setattr(linalg, "JACOBI_SWEEPS", 1)
    with pytest.raises(NoConvergence):
        hermitian_eigen(random_hermitian(rng, 8), "jacobi")


def test_unknown_method():
    with pytest.raises(InputError):
        hermitian_eigen(np.eye(2), "qr")


@given(seeded_matrices(max_dim=6), st.sampled_from(["lapack", "jacobi"]))
def test_eigen_invariants(g, method):
    h = g + g.conj().T
    vals, v = hermitian_eigen(h, method)
    nrm = np.linalg.norm(h, 2)
    for k in range(len(vals)):
        assert np.linalg.norm(h @ v[:, k] - vals[k] * v[:, k]) <= 1e-10 * max(nrm, 1)
    assert abs(np.abs(vals).max() - spectral_norm(h)) <= 1e-10 * max(nrm, 1)


# validation


def test_as_matrix_rejects():
    with pytest.raises(InputError):
        linalg.as_matrix(np.ones((2, 3)))
    with pytest.raises(InputError):
        linalg.as_matrix([[np.nan]])
    with pytest.raises(InputError):
        linalg.as_matrix(np.eye(257))


# solve / inverse


def test_solve_identity(rng):
    b = crandn(rng, 3, 2)
    np.testing.assert_array_equal(solve(np.eye(3), b), b)


def test_solve_diagonal():
    np.testing.assert_allclose(solve(np.diag([2.0, 4.0]), np.eye(2)), np.diag([0.5, 0.25]))


def test_solve_residual(rng):
    a = crandn(rng, 5, 5) + 3 * np.eye(5)
    b = crandn(rng, 5, 3)
    x = solve(a, b)
    assert np.linalg.norm(a @ x - b, 2) <= 1e-10 * spectral_norm(a) * spectral_norm(x)


def test_solve_real_stays_real(rng):
    x = solve(rng.standard_normal((4, 4)) + 4 * np.eye(4), rng.standard_normal(4))
    assert not np.iscomplexobj(x)


def test_solve_singular():
    with pytest.raises(Singular):
        solve(np.array([[1.0, 2.0], [2.0, 4.0]]), np.eye(2))


def test_solve_not_conformable():
    with pytest.raises(InputError):
        solve(np.eye(2), np.ones(3))


def test_inv(rng):
    a = crandn(rng, 4, 4) + 2 * np.eye(4)
    np.testing.assert_allclose(inv(a) @ a, np.eye(4), atol=1e-12)


# spectral norm


def test_norm_examples():
    assert spectral_norm(J2) == pytest.approx(1.0, abs=1e-15)
    assert spectral_norm(np.diag([3, -5j])) == pytest.approx(5.0, abs=1e-14)


def test_norm_random_vector_lower_bound(rng):
    a = crandn(rng, 4, 4)
    v = crandn(rng, 4, 10_000)
    v /= np.linalg.norm(v, axis=0)
    sampled = np.linalg.norm(a @ v, axis=0).max()
    nrm = spectral_norm(a)
    assert sampled <= nrm + 1e-12
    assert nrm - sampled <= 1e-3 * nrm or nrm - sampled < 0.2  # sampling gap shrinks with count
    np.testing.assert_allclose(nrm, np.linalg.svd(a, compute_uv=False)[0], rtol=1e-12)


# square root


def test_sqrt_examples():
    np.testing.assert_allclose(matrix_sqrt_hpd(np.eye(3)), np.eye(3), atol=1e-15)
    np.testing.assert_allclose(matrix_sqrt_hpd(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]), atol=1e-14)


@given(seeded_matrices(max_dim=6))
def test_sqrt_squares_back_and_commutes(g):
    h = g.conj().T @ g + np.eye(g.shape[0])
    r = matrix_sqrt_hpd(h)
    nrm = spectral_norm(h)
    np.testing.assert_allclose(r, r.conj().T, atol=1e-14 * nrm)
    assert spectral_norm(r @ r - h) <= 1e-10 * nrm
    assert spectral_norm(r @ h - h @ r) <= 1e-10 * nrm


def test_sqrt_not_pd():
    with pytest.raises(NotPositiveDefinite):
        matrix_sqrt_hpd(np.diag([1.0, 0.0]))
    with pytest.raises(NotPositiveDefinite):
        matrix_sqrt_hpd(np.diag([1.0, -1.0]))


# resolvent


def test_resolvent_examples():
    np.testing.assert_allclose(resolvent(np.zeros((1, 1)), 2), [[0.5]])
    np.testing.assert_allclose(resolvent(np.diag([0.0, 1.0]), 2), np.diag([0.5, 1.0]))
    np.testing.assert_allclose(resolvent(J2, 1), [[1, 1], [0, 1]], atol=1e-15)


def test_resolvent_at_eigenvalue():
    with pytest.raises(Singular):
        resolvent(np.diag([0.0, 1.0]), 1.0)


@given(seeded_matrices(max_dim=6), st.floats(0, 2 * np.pi))
def test_resolvent_identity(t, angle):
    zeta = (spectral_norm(t) + 0.5) * np.exp(1j * angle)
    r = resolvent(t, zeta)
    np.testing.assert_allclose(r @ (zeta * np.eye(t.shape[0]) - t), np.eye(t.shape[0]), atol=1e-9)


# polynomials


def test_poly_examples(rng):
    np.testing.assert_array_equal(poly_eval_matrix([0, 0, 1], J2), np.zeros((2, 2)))
    t = crandn(rng, 3, 3)
    np.testing.assert_array_equal(poly_eval_matrix([1], t), np.eye(3))
    np.testing.assert_allclose(poly_eval_matrix([0, -1, 1], np.diag([0.0, 1.0])), np.zeros((2, 2)))


@given(seeded_matrices(max_dim=5), st.lists(st.complex_numbers(max_magnitude=2), min_size=1, max_size=6))
def test_poly_matches_power_sum(t, coeffs):
    ref = sum(c * np.linalg.matrix_power(t, k) for k, c in enumerate(coeffs))
    np.testing.assert_allclose(poly_eval_matrix(coeffs, t), ref, atol=1e-10 * (1 + np.abs(ref).max()))


def test_direct_sum():
    d = direct_sum(np.eye(1), 2 * np.eye(2))
    np.testing.assert_array_equal(d, np.diag([1, 2, 2]).astype(complex))


def test_determinism(rng):
    h = random_hermitian(rng, 6)
    a, b = hermitian_eigen(h, "jacobi"), hermitian_eigen(h, "jacobi")
    np.testing.assert_array_equal(a.values, b.values)
    np.testing.assert_array_equal(a.vectors, b.vectors)
