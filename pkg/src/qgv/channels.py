"""Kraus-form quantum channels, noise models, Pauli chi matrices and fidelities."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence, Union

import numpy as np

from .gates import NotUnitary, UnitaryGate
from .linalg import (
    I2,
    PAULIS,
    DimensionMismatch,
    cmat,
    dag,
    is_unitary,
    ketbra,
    psd_sqrt,
    tensor,
)

TP_ATOL = 1e-10


class OutOfRange(ValueError):
    pass


class NotTracePreserving(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class QuantumChannel:
    n_qubits: int
    kraus_ops: tuple

    def __post_init__(self):
        d = 2**self.n_qubits
        ops = tuple(cmat(k) for k in self.kraus_ops)
        if not ops:
            raise ValueError("a channel needs at least one Kraus operator")
        for k in ops:
            if k.shape != (d, d):
                raise DimensionMismatch(f"Kraus operator shape {k.shape}, expected {(d, d)}")
        s = sum(dag(k) @ k for k in ops)
        if np.linalg.norm(s - np.eye(d)) > TP_ATOL:
            raise NotTracePreserving(f"sum K^dag K deviates from I by {np.linalg.norm(s - np.eye(d)):.3g}")
        object.__setattr__(self, "kraus_ops", ops)

    @property
    def dim(self) -> int:
        return 2**self.n_qubits


@dataclass(frozen=True, eq=False)
class ProcessMatrix:
    """Chi matrix in the Pauli basis, normalised to unit trace.

    The channel acts as rho -> sum_mn chi[m, n] P_m rho P_n with P_m
    running over ``pauli_labels(n_qubits)`` (I, X, Y, Z; qubit 1 leftmost).
    """

    n_qubits: int
    chi: np.ndarray

    def __post_init__(self):
        c = cmat(self.chi)
        if c.shape != (4**self.n_qubits, 4**self.n_qubits):
            raise DimensionMismatch(f"chi shape {c.shape} for {self.n_qubits} qubits")
        object.__setattr__(self, "chi", c)

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    def tp_residual(self) -> float:
        """||sum chi_mn P_n P_m / d - I/d||_F; zero for trace-preserving chi."""
        return tp_residual(self.chi, self.n_qubits)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh((self.chi + dag(self.chi)) / 2).min())


# -- noise models -----------------------------------------------------------


@dataclass(frozen=True)
class Depolarizing:
    p: float

    def __post_init__(self):
        if not 0 <= self.p <= 1:
            raise OutOfRange(f"depolarizing p={self.p} outside [0, 1]")


@dataclass(frozen=True)
class AmplitudeDamping:
    gamma: float

    def __post_init__(self):
        if not 0 <= self.gamma <= 1:
            raise OutOfRange(f"gamma={self.gamma} outside [0, 1]")


@dataclass(frozen=True)
class OverRotation:
    axis: tuple
    angle: float

    def __post_init__(self):
        a = np.asarray(self.axis, dtype=float)
        if a.shape != (3,) or abs(np.linalg.norm(a) - 1) > 1e-10:
            raise OutOfRange(f"rotation axis {self.axis} is not a unit 3-vector")
        object.__setattr__(self, "axis", tuple(float(x) for x in a))


@dataclass(frozen=True)
class Composite:
    models: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "models", tuple(self.models))


NoiseModel = Union[Depolarizing, AmplitudeDamping, OverRotation, Composite]


# -- Pauli basis ------------------------------------------------------------


@lru_cache(maxsize=None)
def pauli_labels(n_qubits: int) -> tuple:
    return tuple("".join(p) for p in itertools.product("IXYZ", repeat=n_qubits))


@lru_cache(maxsize=None)
def _pauli_stack(n_qubits: int) -> np.ndarray:
    ps = np.array([tensor(*(PAULIS[c] for c in lab)) for lab in pauli_labels(n_qubits)])
    ps.setflags(write=False)
    return ps


def pauli_basis(n_qubits: int) -> np.ndarray:
    """Array of shape (4**n, 2**n, 2**n) with the Pauli operators in label order."""
    return _pauli_stack(n_qubits)


# -- channel construction ---------------------------------------------------


def identity_channel(n_qubits: int) -> QuantumChannel:
    return QuantumChannel(n_qubits, (np.eye(2**n_qubits),))


def unitary_channel(u: UnitaryGate) -> QuantumChannel:
    if not is_unitary(u.matrix):
        raise NotUnitary(u.name)
    return QuantumChannel(u.n_qubits, (u.matrix,))


def compose(first: QuantumChannel, then: QuantumChannel) -> QuantumChannel:
    """Channel that applies ``first`` and then ``then``."""
    if first.n_qubits != then.n_qubits:
        raise DimensionMismatch("cannot compose channels on different qubit counts")
    ops = tuple(b @ a for b in then.kraus_ops for a in first.kraus_ops)
    return QuantumChannel(first.n_qubits, _prune(ops))


def _prune(ops, tol=1e-14):
    kept = tuple(k for k in ops if np.linalg.norm(k) > tol)
    return kept or ops[:1]


def _local(single_qubit_ops: Sequence[np.ndarray], n_qubits: int) -> tuple:
    return tuple(tensor(*combo) for combo in itertools.product(single_qubit_ops, repeat=n_qubits))


def make_noise(model: NoiseModel, n_qubits: int) -> QuantumChannel:
    """Kraus set for a noise model acting on ``n_qubits``.

    Depolarizing acts globally: rho -> (1-p) rho + p I/d. Amplitude damping and
    over-rotation act identically and independently on every qubit.
    """
    d = 2**n_qubits
    if isinstance(model, Depolarizing):
        paulis = pauli_basis(n_qubits)
        w_id = np.sqrt(1 - model.p + model.p / d**2)
        w = np.sqrt(model.p / d**2)
        ops = (w_id * paulis[0],) + tuple(w * p for p in paulis[1:])
        return QuantumChannel(n_qubits, _prune(ops))
    if isinstance(model, AmplitudeDamping):
        g = model.gamma
        k0 = np.array([[1, 0], [0, np.sqrt(1 - g)]], dtype=complex)
        k1 = np.array([[0, np.sqrt(g)], [0, 0]], dtype=complex)
        return QuantumChannel(n_qubits, _prune(_local((k0, k1), n_qubits)))
    if isinstance(model, OverRotation):
        nx, ny, nz = model.axis
        gen = nx * PAULIS["X"] + ny * PAULIS["Y"] + nz * PAULIS["Z"]
        r = np.cos(model.angle / 2) * I2 - 1j * np.sin(model.angle / 2) * gen
        return QuantumChannel(n_qubits, (tensor(*([r] * n_qubits)),))
    if isinstance(model, Composite):
        ch = identity_channel(n_qubits)
        for m in model.models:
            ch = compose(ch, make_noise(m, n_qubits))
        return ch
    raise TypeError(f"unknown noise model {model!r}")


def device_channel(gate: UnitaryGate, noise: NoiseModel | None = None) -> QuantumChannel:
    """Ideal gate followed by the noise channel."""
    ideal = unitary_channel(gate)
    if noise is None:
        return ideal
    return compose(ideal, make_noise(noise, gate.n_qubits))


def apply(ch: QuantumChannel, rho: np.ndarray) -> np.ndarray:
    rho = cmat(rho)
    if rho.shape != (ch.dim, ch.dim):
        raise DimensionMismatch(f"state shape {rho.shape} vs channel dim {ch.dim}")
    return sum(k @ rho @ dag(k) for k in ch.kraus_ops)


def choi_of_channel(ch: QuantumChannel) -> np.ndarray:
    """(Lambda (x) id)(|Phi><Phi|) with |Phi> = sum_i |ii>/sqrt(d); channel on the left factor."""
    d = ch.dim
    phi = np.eye(d).reshape(d * d, 1) / np.sqrt(d)
    out = np.zeros((d * d, d * d), dtype=complex)
    for k in ch.kraus_ops:
        v = np.kron(k, np.eye(d)) @ phi
        out += v @ dag(v)
    return out


# -- chi representation ------------------------------------------------------


def channel_to_chi(ch: QuantumChannel) -> ProcessMatrix:
    paulis = pauli_basis(ch.n_qubits)
    d = ch.dim
    # a[k, m] = Tr(P_m K_k) / d
    a = np.einsum("mij,kji->km", paulis, np.array(ch.kraus_ops)) / d
    chi = a.T @ a.conj()
    return ProcessMatrix(ch.n_qubits, chi)


def chi_apply(chi: ProcessMatrix, rho: np.ndarray) -> np.ndarray:
    paulis = pauli_basis(chi.n_qubits)
    left = np.einsum("mij,jk->mik", paulis, cmat(rho))
    return np.einsum("mn,mik,nkl->il", chi.chi, left, paulis)


def tp_operator(chi: np.ndarray, n_qubits: int) -> np.ndarray:
    """sum_mn chi_mn P_n P_m (equals I for a trace-preserving chi)."""
    paulis = pauli_basis(n_qubits)
    return np.einsum("mn,nij,mjk->ik", chi, paulis, paulis)


def tp_residual(chi: np.ndarray, n_qubits: int) -> float:
    d = 2**n_qubits
    return float(np.linalg.norm(tp_operator(chi, n_qubits) - np.eye(d)) / d)


def chi_to_channel(chi: ProcessMatrix, atol: float = 1e-8) -> QuantumChannel:
    """Kraus form from the eigendecomposition of a physical chi matrix."""
    w, v = np.linalg.eigh((chi.chi + dag(chi.chi)) / 2)
    paulis = pauli_basis(chi.n_qubits)
    ops = [np.sqrt(lam) * np.einsum("m,mij->ij", v[:, i], paulis) for i, lam in enumerate(w) if lam > atol]
    return QuantumChannel(chi.n_qubits, tuple(ops))


# -- fidelities -------------------------------------------------------------


def _is_rank_one(c: np.ndarray, tol: float = 1e-8) -> bool:
    w = np.linalg.eigvalsh((c + dag(c)) / 2)
    return w[-2] <= tol * max(w[-1], 1.0)


def process_fidelity(a: ProcessMatrix, b: ProcessMatrix) -> float:
    """Entanglement (process) fidelity between two chi matrices.

    Tr(chi_a chi_b) when either is rank one, the Uhlmann fidelity otherwise.
    """
    if a.n_qubits != b.n_qubits:
        raise DimensionMismatch("process matrices on different qubit counts")
    if _is_rank_one(a.chi) or _is_rank_one(b.chi):
        f = float(np.real(np.trace(a.chi @ b.chi)))
    else:
        # ||sqrt(a) sqrt(b)||_1^2, symmetric in a and b
        sv = np.linalg.svd(psd_sqrt(a.chi) @ psd_sqrt(b.chi), compute_uv=False)
        f = float(sv.sum() ** 2)
    return float(np.clip(f, 0.0, 1.0))


def average_gate_fidelity(entanglement_fidelity: float, dim: int) -> float:
    return (dim * entanglement_fidelity + 1) / (dim + 1)


def entanglement_fidelity(ch: QuantumChannel, gate: UnitaryGate) -> float:
    """sum_k |Tr(U^dag K_k)|^2 / d^2."""
    d = ch.dim
    return float(sum(abs(np.trace(dag(gate.matrix) @ k)) ** 2 for k in ch.kraus_ops) / d**2)


def calibrate_noise(target_entanglement_fidelity: float, kind: str = "depolarizing", n_qubits: int = 1) -> NoiseModel:
    """Noise model whose entanglement fidelity with the identity equals the target."""
    f = target_entanglement_fidelity
    if not 0 < f <= 1:
        raise OutOfRange(f"target fidelity {f} outside (0, 1]")
    d = 2**n_qubits
    if kind == "depolarizing":
        p = (1 - f) * d**2 / (d**2 - 1)
        if p > 1:
            raise OutOfRange(f"fidelity {f} below the fully depolarizing floor {1 / d**2}")
        return Depolarizing(p)
    if kind == "amplitude_damping":
        # per qubit F = (1 + sqrt(1-g))^2 / 4
        per_qubit = f ** (1 / n_qubits)
        root = 2 * np.sqrt(per_qubit) - 1
        if root < 0:
            raise OutOfRange(f"fidelity {f} unreachable by amplitude damping")
        return AmplitudeDamping(float(1 - root**2))
    if kind == "over_rotation":
        # per qubit F = cos^2(angle/2)
        per_qubit = f ** (1 / n_qubits)
        return OverRotation((0.0, 0.0, 1.0), float(2 * np.arccos(np.sqrt(per_qubit))))
    raise ValueError(f"unknown noise kind {kind!r}")


def random_density_matrix(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    rank = rank or dim
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ dag(g)
    return rho / np.trace(rho).real


def random_channel(n_qubits: int, rng: np.random.Generator, n_kraus: int = 3) -> QuantumChannel:
    """Random CPTP map from a Haar-ish isometry."""
    d = 2**n_qubits
    g = rng.normal(size=(d * n_kraus, d)) + 1j * rng.normal(size=(d * n_kraus, d))
    q, _ = np.linalg.qr(g)
    return QuantumChannel(n_qubits, tuple(q[i * d:(i + 1) * d] for i in range(n_kraus)))


def pure_state(vec) -> np.ndarray:
    return ketbra(np.asarray(vec, dtype=complex) / np.linalg.norm(vec))
