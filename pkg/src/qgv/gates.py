"""Target gates: the unitary carrier type plus the two demo single-qubit gates and CNOT."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import DimensionMismatch, LinalgError, cmat, is_unitary


class NotUnitary(LinalgError):
    pass


class WrongArity(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class UnitaryGate:
    n_qubits: int
    matrix: np.ndarray
    name: str = field(default="U")

    def __post_init__(self):
        m = cmat(self.matrix)
        if m.shape != (2**self.n_qubits, 2**self.n_qubits):
            raise DimensionMismatch(f"{self.n_qubits}-qubit gate needs a {2**self.n_qubits}x{2**self.n_qubits} matrix, got {m.shape}")
        if not is_unitary(m):
            raise NotUnitary(f"gate {self.name!r} is not unitary within 1e-8")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    @classmethod
    def from_matrix(cls, m, name: str = "U") -> "UnitaryGate":
        m = cmat(m)
        n = int(round(np.log2(m.shape[0])))
        return cls(n, m, name)


def nearest_unitary(m) -> np.ndarray:
    """Closest unitary in Frobenius norm (polar factor)."""
    u, _, vh = np.linalg.svd(cmat(m))
    return u @ vh


# Printed to four decimals; projected onto the unitary group before use.
UA_PRINTED = np.array(
    [[-0.7071 + 0.3536j, 0.6124j],
     [0.6124j, -0.7071 - 0.3536j]]
)
UB_PRINTED = np.array(
    [[-0.1228 - 0.2418j, -0.6964 + 0.6645j],
     [0.6964 + 0.6645j, -0.1228 + 0.2418j]]
)

# Measurement eigenvectors for the two demo gates, keyed (gate, axis index, sign).
# Axis 1 pairs with the H/V inputs, 2 with D/A, 3 with R/L.
CHI_PRINTED = {
    ("a", 1, +1): [-0.7071 + 0.3536j, 0.6124j],
    ("a", 1, -1): [0.6124j, -0.7071 - 0.3536j],
    ("a", 2, +1): [-0.5000 + 0.6830j, -0.5000 + 0.1830j],
    ("a", 2, -1): [-0.5000 - 0.1830j, 0.5000 + 0.6830j],
    ("a", 3, +1): [-0.9330 + 0.2500j, 0.2500 - 0.0670j],
    ("a", 3, -1): [-0.0670 + 0.2500j, -0.2500 + 0.9330j],
    ("b", 1, +1): [-0.1228 - 0.2418j, 0.6964 + 0.6645j],
    ("b", 1, -1): [-0.6964 + 0.6645j, -0.1228 + 0.2418j],
    ("b", 2, +1): [-0.5792 + 0.2988j, 0.4056 + 0.6409j],
    ("b", 2, -1): [0.4056 - 0.6409j, 0.5792 + 0.2988j],
    ("b", 3, +1): [-0.5567 - 0.6634j, 0.3214 + 0.3830j],
    ("b", 3, -1): [0.3830 + 0.3214j, 0.6634 + 0.5567j],
}

IDENTITY = UnitaryGate(1, np.eye(2), "I")
UA = UnitaryGate(1, nearest_unitary(UA_PRINTED), "Ua")
UB = UnitaryGate(1, nearest_unitary(UB_PRINTED), "Ub")
CNOT = UnitaryGate(
    2,
    np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]]),
    "CNOT",
)
HADAMARD = UnitaryGate(1, np.array([[1, 1], [1, -1]]) / np.sqrt(2), "H")
PAULI_X = UnitaryGate(1, np.array([[0, 1], [1, 0]]), "X")
PAULI_Z = UnitaryGate(1, np.array([[1, 0], [0, -1]]), "Z")

NAMED_GATES = {g.name: g for g in (IDENTITY, UA, UB, CNOT, HADAMARD, PAULI_X, PAULI_Z)}


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a Ginibre matrix."""
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(g)
    d = np.diag(r)
    return q * (d / np.abs(d))
