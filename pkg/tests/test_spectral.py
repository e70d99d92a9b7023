import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import magnetic_laplacian_loops

from gsphar.spectral import (
    BasisCache,
    classical_normalized_laplacian,
    eigendecompose,
    gft,
    hermitian_adjacency,
    igft,
    magnetic_basis,
    magnetic_laplacian,
    normalized_magnetic_laplacian,
    phase_matrix,
    symmetrize,
)

EDGE = np.array([[0.0, 1.0], [0.0, 0.0]])


def random_digraph(rng, n, density=0.5):
    A = rng.uniform(0, 1, (n, n)) * (rng.uniform(size=(n, n)) < density)
    np.fill_diagonal(A, 0.0)
    return A


@st.composite
def digraphs(draw, max_n=8):
    n = draw(st.integers(1, max_n))
    seed = draw(st.integers(0, 2**32 - 1))
    density = draw(st.sampled_from([0.0, 0.2, 0.5, 1.0]))
    return random_digraph(np.random.default_rng(seed), n, density)


def test_symmetrize_examples():
    As, Ds = symmetrize(EDGE)
    np.testing.assert_array_equal(As, [[0, 0.5], [0.5, 0]])
    np.testing.assert_array_equal(Ds, np.diag([0.5, 0.5]))
    sym = np.array([[0.0, 2.0], [2.0, 0.0]])
    np.testing.assert_array_equal(symmetrize(sym)[0], sym)
    np.testing.assert_array_equal(symmetrize(np.zeros((3, 3)))[1], np.eye(3))


def test_phase_matrix_examples():
    assert np.all(phase_matrix(EDGE, 0.0) == 0)
    np.testing.assert_allclose(phase_matrix(EDGE, 0.25), [[0, np.pi / 2], [-np.pi / 2, 0]], atol=1e-15)


def test_hermitian_adjacency_examples():
    As, _ = symmetrize(EDGE)
    np.testing.assert_array_equal(hermitian_adjacency(As, np.zeros((2, 2))), As)
    H = hermitian_adjacency(As, phase_matrix(EDGE, 0.25))
    np.testing.assert_allclose(H, [[0, 0.5j], [-0.5j, 0]], atol=1e-15)


def test_hand_anchor():
    L = normalized_magnetic_laplacian(EDGE, 0.25)
    np.testing.assert_allclose(L, [[1, -1j], [1j, 1]], atol=1e-12)
    np.testing.assert_allclose(eigendecompose(L).eigenvalues, [0.0, 2.0], atol=1e-12)


def test_classical_reductions():
    path = np.array([[0.0, 1.0], [1.0, 0.0]])
    np.testing.assert_allclose(normalized_magnetic_laplacian(path, 0.0), [[1, -1], [-1, 1]], atol=1e-15)
    np.testing.assert_array_equal(normalized_magnetic_laplacian(np.zeros((3, 3)), 0.25), np.eye(3))


def test_zero_diagonal_required():
    with pytest.raises(ValueError, match="zero diagonal"):
        normalized_magnetic_laplacian(np.eye(2), 0.25)


def test_negative_weights_rejected():
    with pytest.raises(ValueError):
        normalized_magnetic_laplacian(np.array([[0.0, -1.0], [0.0, 0.0]]), 0.25)


@settings(max_examples=80, deadline=None)
@given(digraphs(), st.sampled_from([0.0, 0.1, 0.25, 0.5]))
def test_laplacian_matches_loop_oracle(A, q):
    L = normalized_magnetic_laplacian(A, q)
    np.testing.assert_allclose(L, magnetic_laplacian_loops(A.tolist(), q), atol=1e-13)
    assert np.max(np.abs(L - L.conj().T), initial=0.0) <= 1e-12


@settings(max_examples=80, deadline=None)
@given(digraphs(), st.sampled_from([0.0, 0.1, 0.25, 0.5]))
def test_basis_invariants(A, q):
    b = magnetic_basis(A, q)
    n = A.shape[0]
    assert np.max(np.abs(b.U.conj().T @ b.U - np.eye(n))) < 1e-9
    assert np.all(np.diff(b.eigenvalues) >= -1e-12)
    assert b.eigenvalues.min() > -1e-9
    assert b.eigenvalues.max() < 2 + 1e-9
    recon = (b.U * b.eigenvalues) @ b.U.conj().T
    np.testing.assert_allclose(recon, b.laplacian, atol=1e-9)


@settings(max_examples=40, deadline=None)
@given(digraphs())
def test_q0_equals_classical(A):
    As, _ = symmetrize(A)
    np.testing.assert_allclose(normalized_magnetic_laplacian(A, 0.0), classical_normalized_laplacian(As), atol=1e-12)


def test_unnormalized_magnetic_laplacian_hermitian(rng):
    L = magnetic_laplacian(random_digraph(rng, 6), 0.3)
    np.testing.assert_array_equal(L, L.conj().T)
    assert np.linalg.eigvalsh(L).min() > -1e-10


def test_unit_edges_quarter_charge_restatement(rng):
    # one unit edge per connected pair: off-diagonal entries purely imaginary, so Hermitian symmetry
    # makes them antisymmetric across the diagonal
    n = 6
    A = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            if rng.uniform() < 0.6:
                if rng.uniform() < 0.5:
                    A[i, j] = 1.0
                else:
                    A[j, i] = 1.0
    L = magnetic_laplacian(A, 0.25)
    off = ~np.eye(n, dtype=bool)
    assert np.max(np.abs(L.real[off])) < 1e-15
    np.testing.assert_allclose(L[off], -L.T[off], atol=1e-15)


def test_identity_laplacian():
    b = eigendecompose(np.eye(4))
    np.testing.assert_array_equal(b.eigenvalues, np.ones(4))
    np.testing.assert_allclose(np.abs(b.U), np.eye(4), atol=1e-15)


def test_random_hermitian_reconstruction(rng):
    M = rng.normal(size=(7, 7)) + 1j * rng.normal(size=(7, 7))
    L = M @ M.conj().T
    b = eigendecompose(L)
    np.testing.assert_allclose((b.U * b.eigenvalues) @ b.U.conj().T, L, atol=1e-9)


def test_non_hermitian_rejected():
    with pytest.raises(ValueError, match="Hermitian"):
        eigendecompose(np.array([[1.0, 1.0], [0.0, 1.0]]))


def test_phase_convention(rng):
    b = magnetic_basis(random_digraph(rng, 8), 0.25)
    for k in range(8):
        col = b.U[:, k]
        top = np.argmax(np.abs(col) >= np.abs(col).max() - 1e-10)
        assert abs(col[top].imag) < 1e-15
        assert col[top].real > 0


def test_phase_tie_goes_to_lowest_row():
    # both eigenvectors of a single undirected edge have equal-magnitude entries
    for q in (0.0, 0.25):
        b = magnetic_basis(np.array([[0.0, 1.0], [1.0, 0.0]]), q)
        for k in range(2):
            assert abs(abs(b.U[0, k]) - abs(b.U[1, k])) < 1e-12
            assert b.U[0, k].real > 0 and abs(b.U[0, k].imag) < 1e-15


def test_decomposition_deterministic(rng):
    A = random_digraph(rng, 10)
    a, b = magnetic_basis(A, 0.25), magnetic_basis(A, 0.25)
    assert a.U.tobytes() == b.U.tobytes()


def test_basis_read_only(rng):
    b = magnetic_basis(random_digraph(rng, 3), 0.25)
    with pytest.raises(ValueError):
        b.U[0, 0] = 0


def test_gft_examples(rng):
    b = magnetic_basis(random_digraph(rng, 8), 0.25)
    np.testing.assert_allclose(gft(b, b.U), np.eye(8), atol=1e-12)
    assert np.all(gft(b, np.zeros((8, 3))) == 0)
    np.testing.assert_allclose(igft(b, np.eye(8)), b.U, atol=1e-15)
    X = rng.normal(size=(8, 5))
    back = igft(b, gft(b, X))
    np.testing.assert_allclose(back.real, X, atol=1e-10)
    assert np.max(np.abs(back.imag)) < 1e-10
    Z = X + 1j * rng.normal(size=(8, 5))
    np.testing.assert_allclose(igft(b, gft(b, Z)), Z, atol=1e-10)
    np.testing.assert_allclose(np.linalg.norm(gft(b, X), axis=0), np.linalg.norm(X, axis=0), rtol=1e-10)


def test_gft_dimension_check(rng):
    b = magnetic_basis(random_digraph(rng, 4), 0.25)
    with pytest.raises(ValueError, match="rows"):
        gft(b, np.ones((3, 2)))
    with pytest.raises(ValueError, match="rows"):
        igft(b, np.ones((5, 2)))


def test_basis_cache(rng):
    cache = BasisCache(0.25)
    A = random_digraph(rng, 5)
    first = cache.get(A)
    assert cache.get(A + 1e-14 * (A > 0)) is first
    assert len(cache) == 1
    B = A.copy()
    B[0, 1] += 0.1
    assert cache.get(B) is not first
    assert len(cache) == 2
    np.testing.assert_array_equal(cache.stack([A, B, A])[2], first.U)
