"""Magnetic Laplacian of a directed weighted graph and the graph Fourier
transform over its (complex) eigenbasis."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from ._validation import check_square_nonneg

_PHASE_TIE_TOL = 1e-10


@dataclass(frozen=True)
class MagneticBasis:
    q: float
    U: np.ndarray
    eigenvalues: np.ndarray
    laplacian: np.ndarray

    @property
    def n(self) -> int:
        return self.U.shape[0]

    def __post_init__(self):
        for name in ("U", "eigenvalues", "laplacian"):
            getattr(self, name).setflags(write=False)


def _check_adjacency(A) -> np.ndarray:
    A = check_square_nonneg(A)
    if np.any(np.diag(A) != 0):
        raise ValueError("adjacency must have a zero diagonal")
    return A


def symmetrize(A) -> tuple[np.ndarray, np.ndarray]:
    """(A + A')/2 and its degree matrix, with zero degrees replaced by 1."""
    A = check_square_nonneg(A)
    As = 0.5 * (A + A.T)
    deg = As.sum(axis=1)
    deg = np.where(deg > 0, deg, 1.0)
    return As, np.diag(deg)


def phase_matrix(A, q: float) -> np.ndarray:
    if q < 0:
        raise ValueError("q must be non-negative")
    A = np.asarray(A, dtype=float)
    return 2.0 * np.pi * q * (A - A.T)


def hermitian_adjacency(As, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if np.max(np.abs(theta + theta.T), initial=0.0) > 0:
        raise ValueError("phase matrix must be antisymmetric")
    return np.asarray(As, dtype=float) * np.exp(1j * theta)


def normalized_magnetic_laplacian(A, q: float) -> np.ndarray:
    """I - (D^-1/2 A_s D^-1/2) * exp(i Theta), element-wise phase."""
    A = _check_adjacency(A)
    As, Ds = symmetrize(A)
    inv_sqrt = 1.0 / np.sqrt(np.diag(Ds))
    norm_adj = inv_sqrt[:, None] * As * inv_sqrt[None, :]
    theta = phase_matrix(A, q)
    return np.eye(A.shape[0]) - norm_adj * np.exp(1j * theta)


def magnetic_laplacian(A, q: float) -> np.ndarray:
    """Unnormalized D_s - H."""
    A = _check_adjacency(A)
    As, Ds = symmetrize(A)
    deg = np.diag(As.sum(axis=1))
    return deg - hermitian_adjacency(As, phase_matrix(A, q))


def classical_normalized_laplacian(A) -> np.ndarray:
    """I - D^-1/2 A D^-1/2 for a symmetric adjacency (isolated nodes keep degree 1)."""
    A = check_square_nonneg(A)
    deg = A.sum(axis=1)
    deg = np.where(deg > 0, deg, 1.0)
    inv_sqrt = 1.0 / np.sqrt(deg)
    return np.eye(A.shape[0]) - inv_sqrt[:, None] * A * inv_sqrt[None, :]


def _fix_phases(U: np.ndarray) -> np.ndarray:
    mags = np.abs(U)
    top = mags.max(axis=0)
    # first row whose magnitude is within tolerance of the column maximum
    rows = np.argmax(mags >= top[None, :] - _PHASE_TIE_TOL, axis=0)
    pivot = U[rows, np.arange(U.shape[1])]
    if np.iscomplexobj(U):
        return U * (np.conj(pivot) / np.abs(pivot))[None, :]
    return U * np.sign(pivot)[None, :]


def eigendecompose(laplacian, q: float | None = None) -> MagneticBasis:
    """Ascending real spectrum and orthonormal eigenvectors with a fixed phase.

    Each eigenvector is rotated so its largest-magnitude entry (lowest row
    on ties) is real and positive.
    """
    L = np.asarray(laplacian)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise ValueError("laplacian must be square")
    if np.max(np.abs(L - L.conj().T), initial=0.0) > 1e-10:
        raise ValueError("laplacian is not Hermitian")
    real_path = not np.iscomplexobj(L) or not np.any(L.imag)
    try:
        if real_path:
            w, U = linalg.eigh(np.ascontiguousarray(L.real))
        else:
            w, U = linalg.eigh(L)
    except linalg.LinAlgError as exc:
        raise ValueError(f"eigendecomposition failed: {exc}") from exc
    U = _fix_phases(U)
    return MagneticBasis(float(q) if q is not None else float("nan"), U, np.asarray(w, dtype=float), np.array(L))


def magnetic_basis(A, q: float) -> MagneticBasis:
    return eigendecompose(normalized_magnetic_laplacian(A, q), q)


def gft(basis: MagneticBasis, X) -> np.ndarray:
    """Spectral coefficients U^H X."""
    X = np.asarray(X)
    if X.shape[0] != basis.n:
        raise ValueError(f"signal has {X.shape[0]} rows, basis has {basis.n} nodes")
    return np.asarray(basis.U.conj().T @ X, dtype=complex)


def igft(basis: MagneticBasis, X_hat) -> np.ndarray:
    X_hat = np.asarray(X_hat)
    if X_hat.shape[0] != basis.n:
        raise ValueError(f"spectrum has {X_hat.shape[0]} rows, basis has {basis.n} nodes")
    return np.asarray(basis.U @ X_hat, dtype=complex)


class BasisCache:
    """Memoizes magnetic bases by adjacency, rounded to 1e-12."""

    def __init__(self, q: float):
        self.q = q
        self._store: dict[bytes, MagneticBasis] = {}

    def __len__(self):
        return len(self._store)

    def get(self, A) -> MagneticBasis:
        A = np.asarray(A, dtype=float)
        key = np.round(A, 12).tobytes()
        basis = self._store.get(key)
        if basis is None:
            basis = magnetic_basis(A, self.q)
            self._store[key] = basis
        return basis

    def stack(self, adjacencies) -> np.ndarray:
        """Eigenvector matrices for a stack of adjacencies, shape (S, N, N)."""
        return np.stack([self.get(A).U for A in adjacencies])
