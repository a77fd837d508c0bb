"""Gate-verification strategies in the prepare-and-measure picture.

A strategy is a list of probing settings: prepare an input state, send it
through the gate, measure a +-1 observable, and count the trial as passed when
the outcome equals the setting's pass sign. Averaging the pass projectors in
the Choi picture gives the verification operator ``omega``; its spectral gap
``nu`` sets how fast confidence accumulates.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .channels import QuantumChannel, apply, choi_of_channel
from .gates import CNOT, UnitaryGate, WrongArity
from .linalg import (
    PAULIS,
    DimensionMismatch,
    NotInvolution,
    cmat,
    dag,
    eig_hermitian,
    is_involution,
    ketbra,
    pauli_string,
    projector_onto_sign,
    tensor,
)

ENSEMBLE_ATOL = 1e-10
GAP_TOL = 1e-9


class EnsembleNotUniform(ValueError):
    pass


# Eigenstates of single-qubit Paulis, keyed (axis, eigenvalue).
_S = 1 / np.sqrt(2)
PAULI_EIGENSTATES = {
    ("Z", +1): np.array([1, 0], dtype=complex),
    ("Z", -1): np.array([0, 1], dtype=complex),
    ("X", +1): np.array([_S, _S], dtype=complex),
    ("X", -1): np.array([_S, -_S], dtype=complex),
    ("Y", +1): np.array([_S, 1j * _S], dtype=complex),
    ("Y", -1): np.array([_S, -1j * _S], dtype=complex),
}
STATE_NAMES = {
    ("Z", +1): "0", ("Z", -1): "1",
    ("X", +1): "+", ("X", -1): "-",
    ("Y", +1): "+i", ("Y", -1): "-i",
}


def density_matrix(m) -> np.ndarray:
    """Validate and return a density matrix."""
    rho = cmat(m)
    if rho.shape[0] != rho.shape[1]:
        raise DimensionMismatch(f"density matrix must be square, got {rho.shape}")
    if np.linalg.norm(rho - dag(rho)) > 1e-10:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > 1e-10:
        raise ValueError(f"density matrix trace {np.trace(rho).real:.12g} != 1")
    if np.linalg.eigvalsh(rho).min() < -1e-10:
        raise ValueError("density matrix is not positive semidefinite")
    return rho


@dataclass(frozen=True, eq=False)
class ProbingSetting:
    label: str
    input_state: np.ndarray
    observable: np.ndarray
    pass_sign: int
    probability: float
    basis_label: str = ""
    state_vector: np.ndarray | None = None

    def __post_init__(self):
        if not 0 < self.probability <= 1:
            raise ValueError(f"setting probability {self.probability} outside (0, 1]")
        if self.pass_sign not in (1, -1):
            raise ValueError("pass_sign must be +1 or -1")
        rho = density_matrix(self.input_state)
        obs = cmat(self.observable)
        if obs.shape != rho.shape:
            raise DimensionMismatch("observable and input state dimensions differ")
        if not is_involution(obs):
            raise NotInvolution(f"observable of setting {self.label!r} is not an involution")
        object.__setattr__(self, "input_state", rho)
        object.__setattr__(self, "observable", obs)

    @property
    def pass_projector(self) -> np.ndarray:
        return projector_onto_sign(self.observable, self.pass_sign)


@dataclass(frozen=True, eq=False)
class VerificationStrategy:
    gate: UnitaryGate
    settings: tuple
    omega: np.ndarray = field(repr=False)
    nu: float

    @property
    def n_settings(self) -> int:
        return len(self.settings)

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([s.probability for s in self.settings])

    def distinct_bases(self) -> list[str]:
        seen = []
        for s in self.settings:
            if s.basis_label not in seen:
                seen.append(s.basis_label)
        return seen


def conjugated_observable(u: UnitaryGate, p) -> np.ndarray:
    """U p U^dag for a Hermitian involution p."""
    p = cmat(p)
    if p.shape != u.matrix.shape:
        raise DimensionMismatch(f"observable {p.shape} vs gate {u.matrix.shape}")
    if not is_involution(p):
        raise NotInvolution("observable is not a Hermitian involution")
    return u.matrix @ p @ dag(u.matrix)


def choi_state(u: UnitaryGate) -> np.ndarray:
    """(U (x) I)|Phi><Phi|(U (x) I)^dag with |Phi> = sum_i |ii>/sqrt(d)."""
    d = u.dim
    phi = np.eye(d).reshape(d * d, 1) / np.sqrt(d)
    v = np.kron(u.matrix, np.eye(d)) @ phi
    return ketbra(v)


def strategy_omega(settings) -> np.ndarray:
    """Choi-picture operator d * sum_i p_i Q_i (x) rho_i^T (transpose in the computational basis)."""
    settings = list(settings)
    d = settings[0].input_state.shape[0]
    avg = sum(s.probability * s.input_state for s in settings)
    if np.linalg.norm(avg - np.eye(d) / d) > ENSEMBLE_ATOL:
        raise EnsembleNotUniform("average input state is not maximally mixed")
    return d * sum(s.probability * np.kron(s.pass_projector, s.input_state.T) for s in settings)


def spectral_gap(omega) -> float:
    """Largest eigenvalue minus the largest one strictly below it; 0 if fully degenerate."""
    w = eig_hermitian(omega).eigenvalues
    lower = w[w < w[0] - GAP_TOL]
    if lower.size == 0:
        return 0.0
    return float(w[0] - lower[0])


def _build(gate: UnitaryGate, settings: list[ProbingSetting]) -> VerificationStrategy:
    total = sum(s.probability for s in settings)
    if abs(total - 1) > 1e-12:
        raise ValueError(f"setting probabilities sum to {total}")
    omega = strategy_omega(settings)
    omega.setflags(write=False)
    nu = spectral_gap(omega)
    psi = choi_state(gate)
    if np.linalg.norm(omega @ psi - psi) > 1e-8:
        raise ValueError("ideal Choi state is not a +1 eigenvector of omega")
    if not 0 < nu <= 1 + 1e-12:
        raise ValueError(f"spectral gap {nu} outside (0, 1]")
    return VerificationStrategy(gate, tuple(settings), omega, nu)


def single_qubit_strategy(u: UnitaryGate) -> VerificationStrategy:
    """Six-state strategy: prepare a Pauli eigenstate, measure the conjugated Pauli.

    Input eigenstate of sigma with eigenvalue s is measured in U sigma U^dag and
    passes on outcome s, so the ideal gate passes with certainty.
    """
    if u.n_qubits != 1:
        raise WrongArity(f"single-qubit strategy needs a 1-qubit gate, got {u.n_qubits}")
    settings = []
    for axis in ("Z", "X", "Y"):
        obs = conjugated_observable(u, PAULIS[axis])
        for sign in (+1, -1):
            vec = PAULI_EIGENSTATES[(axis, sign)]
            name = STATE_NAMES[(axis, sign)]
            settings.append(
                ProbingSetting(
                    label=f"|{name}>:U{axis}U+",
                    input_state=ketbra(vec),
                    observable=obs,
                    pass_sign=sign,
                    probability=1 / 6,
                    basis_label=f"U{axis}U+",
                    state_vector=vec,
                )
            )
    return _build(u, settings)


# Input stabilizers of the CNOT strategy in the order they are listed for the
# mixed states I/2 (x) |0><0|, |0><0| (x) I/2, |+><+| (x) I/2, I/2 (x) |+><+|.
CNOT_INPUT_STABILIZERS = ("IZ", "ZI", "XI", "IX")


def _pauli_conjugation_label(u: np.ndarray, label: str) -> tuple[str, int]:
    """Return (label', phase) with U P U^dag = phase * P' for a Clifford U."""
    img = u @ pauli_string(label) @ dag(u)
    n = len(label)
    for cand in itertools.product("IXYZ", repeat=n):
        c = "".join(cand)
        ov = np.trace(dag(pauli_string(c)) @ img) / 2**n
        if abs(abs(ov) - 1) < 1e-9:
            return c, int(np.round(ov.real))
    raise ValueError(f"{label} does not map to a Pauli string")


def cnot_strategy(gate: UnitaryGate = CNOT) -> VerificationStrategy:
    """Sixteen pure product preparations for the CNOT gate.

    Each of the eight mixed inputs is split into two equiprobable computational
    or Hadamard-basis product states. The measured observable is the image of
    the input stabilizer under the gate, and the pass sign is the input eigenvalue.
    """
    if gate.n_qubits != 2:
        raise WrongArity("cnot_strategy needs a 2-qubit gate")
    settings = []
    for stab in CNOT_INPUT_STABILIZERS:
        out_label, phase = _pauli_conjugation_label(gate.matrix, stab)
        if phase < 0:
            out_label = "-" + out_label
        obs = conjugated_observable(gate, pauli_string(stab))
        fixed_q = 0 if stab[0] != "I" else 1
        axis = stab[fixed_q]
        for sign in (+1, -1):
            # the free qubit is maximally mixed; realize it with |0>, |1>
            for free_bit in (0, 1):
                free_vec = PAULI_EIGENSTATES[("Z", +1 if free_bit == 0 else -1)]
                fixed_vec = PAULI_EIGENSTATES[(axis, sign)]
                vecs = [None, None]
                vecs[fixed_q] = fixed_vec
                vecs[1 - fixed_q] = free_vec
                vec = np.kron(vecs[0], vecs[1])
                names = [STATE_NAMES[(axis, sign)] if q == fixed_q else str(free_bit) for q in (0, 1)]
                settings.append(
                    ProbingSetting(
                        label=f"phi{stab}{'+' if sign > 0 else '-'}|{names[0]},{names[1]}>:{out_label}",
                        input_state=ketbra(vec),
                        observable=obs,
                        pass_sign=sign,
                        probability=1 / 16,
                        basis_label=out_label,
                        state_vector=vec,
                    )
                )
    return _build(gate, settings)


def omega_three_projector(u: UnitaryGate) -> np.ndarray:
    """Closed-form single-qubit operator (P+_{UXU,X} + P-_{UYU,Y} + P+_{UZU,Z}) / 3."""
    terms = [("X", +1), ("Y", -1), ("Z", +1)]
    out = np.zeros((4, 4), dtype=complex)
    for axis, sign in terms:
        obs = tensor(conjugated_observable(u, PAULIS[axis]), PAULIS[axis])
        out += projector_onto_sign(obs, sign)
    return out / 3


def judge(setting: ProbingSetting, outcome: int) -> bool:
    return outcome == setting.pass_sign


def setting_pass_probabilities(strategy: VerificationStrategy, channel: QuantumChannel) -> np.ndarray:
    """Per-setting Tr(Q_i Lambda(rho_i))."""
    if channel.dim != strategy.gate.dim:
        raise DimensionMismatch("channel and strategy act on different dimensions")
    return np.array([np.real(np.trace(s.pass_projector @ apply(channel, s.input_state))) for s in strategy.settings])


def pass_probability(strategy: VerificationStrategy, channel: QuantumChannel) -> float:
    return float(strategy.probabilities @ setting_pass_probabilities(strategy, channel))


def pass_probability_choi(strategy: VerificationStrategy, channel: QuantumChannel) -> float:
    """Tr(Omega * choi(Lambda)), the entangled-picture expression of the same number."""
    if channel.dim != strategy.gate.dim:
        raise DimensionMismatch("channel and strategy act on different dimensions")
    return float(np.real(np.trace(strategy.omega @ choi_of_channel(channel))))


def strategy_to_dict(strategy: VerificationStrategy) -> dict:
    """JSON-ready audit dump. Complex numbers are [re, im] pairs."""
    from .io import complex_to_json

    eig = eig_hermitian(strategy.omega).eigenvalues
    return {
        "gate": strategy.gate.name,
        "n_qubits": strategy.gate.n_qubits,
        "n_settings": strategy.n_settings,
        "distinct_bases": strategy.distinct_bases(),
        "settings": [
            {
                "label": s.label,
                "state_vector": complex_to_json(s.state_vector) if s.state_vector is not None else None,
                "input_state": complex_to_json(s.input_state),
                "basis": s.basis_label,
                "observable": complex_to_json(s.observable),
                "pass_sign": s.pass_sign,
                "probability": s.probability,
            }
            for s in strategy.settings
        ],
        "omega": complex_to_json(strategy.omega),
        "omega_spectrum": [float(x) for x in np.round(eig, 12)],
        "nu": strategy.nu,
    }
