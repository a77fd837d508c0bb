"""Small dense complex linear algebra (d <= 16) used throughout the package.

Matrices are plain ``numpy.ndarray`` objects of dtype complex128.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

HERMITIAN_ATOL = 1e-10
INVOLUTION_ATOL = 1e-8
MAX_DIM = 16

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = {"I": I2, "X": X, "Y": Y, "Z": Z}


class LinalgError(ValueError):
    pass


class NotHermitian(LinalgError):
    pass


class NotInvolution(LinalgError):
    pass


class DimensionMismatch(LinalgError):
    pass


def cmat(a) -> np.ndarray:
    """Coerce to a finite 2-D complex array."""
    m = np.array(a, dtype=complex)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    if m.ndim != 2:
        raise DimensionMismatch(f"expected a matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise LinalgError("matrix has non-finite entries")
    return m


def dag(a: np.ndarray) -> np.ndarray:
    return np.conj(a).T


def tensor(*mats: np.ndarray) -> np.ndarray:
    """Kronecker product of one or more matrices, left factor = qubit 1."""
    return reduce(np.kron, [cmat(m) for m in mats])


def pauli_string(label: str) -> np.ndarray:
    """``pauli_string("XZ")`` -> X (x) Z."""
    return tensor(*(PAULIS[c] for c in label.upper()))


def is_hermitian(a: np.ndarray, atol: float = HERMITIAN_ATOL) -> bool:
    a = np.asarray(a)
    return a.shape[0] == a.shape[1] and np.linalg.norm(a - dag(a)) <= atol


def is_unitary(u: np.ndarray, atol: float = INVOLUTION_ATOL) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return np.linalg.norm(dag(u) @ u - np.eye(u.shape[0])) <= atol


def is_involution(a: np.ndarray, atol: float = INVOLUTION_ATOL) -> bool:
    a = np.asarray(a)
    return is_hermitian(a, atol) and np.linalg.norm(a @ a - np.eye(a.shape[0])) <= atol


@dataclass(frozen=True)
class HermEig:
    eigenvalues: np.ndarray  # real, descending
    eigenvectors: np.ndarray  # columns paired with eigenvalues

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return v @ np.diag(self.eigenvalues) @ dag(v)


def eig_hermitian(a: np.ndarray) -> HermEig:
    """Eigendecomposition of a Hermitian matrix, eigenvalues sorted descending.

    Vectors inside a degenerate eigenspace are an arbitrary orthonormal basis.
    """
    a = cmat(a)
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"not square: {a.shape}")
    if a.shape[0] > MAX_DIM:
        raise DimensionMismatch(f"dimension {a.shape[0]} exceeds {MAX_DIM}")
    if not is_hermitian(a):
        raise NotHermitian(f"||A - A^dag||_F = {np.linalg.norm(a - dag(a)):.3g}")
    w, v = np.linalg.eigh((a + dag(a)) / 2)
    order = np.argsort(w)[::-1]
    return HermEig(w[order].copy(), v[:, order].copy())


def projector_onto_sign(obs: np.ndarray, sign: int) -> np.ndarray:
    """Projector (I + sign*obs)/2 onto the ``sign`` eigenspace of an involution."""
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    obs = cmat(obs)
    if not is_involution(obs):
        raise NotInvolution("observable is not a Hermitian involution")
    return (np.eye(obs.shape[0]) + sign * obs) / 2


def psd_sqrt(a: np.ndarray) -> np.ndarray:
    """Square root of a positive semidefinite Hermitian matrix (negative parts clipped)."""
    w, v = np.linalg.eigh((a + dag(a)) / 2)
    return (v * np.sqrt(np.clip(w, 0, None))) @ dag(v)


def ket(*amps) -> np.ndarray:
    v = np.array(amps, dtype=complex).reshape(-1, 1)
    return v / np.linalg.norm(v)


def ketbra(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=complex).reshape(-1, 1)
    return v @ dag(v)
