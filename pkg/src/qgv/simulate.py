"""Seeded Monte-Carlo runs of verification campaigns and tomography count tables.

Every (repetition, grid point) pair draws from its own PCG64 stream derived
from ``SeedSequence(seed, spawn_key=...)``, so results do not depend on the
order in which pairs are evaluated.
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np

from .certify import NotCertifiable, VerificationResult, epsilon_at_confidence
from .channels import QuantumChannel, apply
from .linalg import (
    PAULIS,
    DimensionMismatch,
    NotInvolution,
    cmat,
    is_involution,
    ketbra,
    projector_onto_sign,
    tensor,
)
from .verification import PAULI_EIGENSTATES, VerificationStrategy


class NotInformationallyComplete(UserWarning):
    pass


@dataclass(frozen=True)
class RngSpec:
    seed: int
    stream_id: int = 0

    def generator(self, *sub) -> np.random.Generator:
        key = (int(self.stream_id),) + tuple(int(s) for s in sub)
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(self.seed), spawn_key=key)))


@dataclass(frozen=True)
class OutcomeRecord:
    trial_index: int
    setting_label: str
    outcome: int
    passed: bool

    def as_dict(self) -> dict:
        return {"trial": self.trial_index, "setting": self.setting_label, "outcome": self.outcome, "passed": self.passed}


@dataclass
class CountTable:
    """Counts per (probe, basis) row; columns follow ``outcome_labels``.

    Counts may be non-integer when built from exact probabilities.
    """

    probes: list
    bases: list
    outcome_labels: list
    counts: np.ndarray  # shape (n_probes, n_bases, n_outcomes)
    n_qubits: int = 1
    shots: np.ndarray = field(default=None)

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=float)
        expect = (len(self.probes), len(self.bases), len(self.outcome_labels))
        if self.counts.shape != expect:
            raise DimensionMismatch(f"counts shape {self.counts.shape}, expected {expect}")
        if self.shots is None:
            self.shots = self.counts.sum(axis=2)

    @property
    def n_settings(self) -> int:
        return len(self.probes) * len(self.bases)

    @property
    def total_shots(self) -> float:
        return float(self.counts.sum())

    def rows(self):
        for i, p in enumerate(self.probes):
            for j, b in enumerate(self.bases):
                yield p, b, self.counts[i, j]


# -- probe states and bases for tomography -----------------------------------

SINGLE_QUBIT_PROBES = ("H", "V", "D", "A", "R", "L")
_PROBE_AXES = {"H": ("Z", 1), "V": ("Z", -1), "D": ("X", 1), "A": ("X", -1), "R": ("Y", 1), "L": ("Y", -1)}
SINGLE_QUBIT_BASES = ("X", "Y", "Z")


def probe_state(label: str) -> np.ndarray:
    """Product probe such as "H" or "HD" (qubit 1 first); H=|0>, D=|+>, R=|+i>."""
    return tensor(*(ketbra(PAULI_EIGENSTATES[_PROBE_AXES[c]]) for c in label))


def tomography_grid(n_qubits: int) -> tuple[list, list]:
    probes = ["".join(p) for p in itertools.product(SINGLE_QUBIT_PROBES, repeat=n_qubits)]
    bases = ["".join(b) for b in itertools.product(SINGLE_QUBIT_BASES, repeat=n_qubits)]
    return probes, bases


def outcome_labels(n_qubits: int) -> list:
    return ["".join(s) for s in itertools.product("+-", repeat=n_qubits)]


def outcome_projector(basis: str, outcome: str) -> np.ndarray:
    return tensor(*(projector_onto_sign(PAULIS[b], 1 if o == "+" else -1) for b, o in zip(basis, outcome)))


def is_informationally_complete(probes, bases) -> bool:
    n = len(probes[0])
    d = 2**n
    states = np.array([probe_state(p).reshape(-1) for p in probes])
    effects = np.array([outcome_projector(b, o).reshape(-1) for b in bases for o in outcome_labels(n)])
    return np.linalg.matrix_rank(states) == d * d and np.linalg.matrix_rank(effects) == d * d


def setting_probabilities(device: QuantumChannel, probes, bases) -> np.ndarray:
    """Exact Born probabilities, shape (n_probes, n_bases, 2**n)."""
    n = device.n_qubits
    labels = outcome_labels(n)
    out = np.empty((len(probes), len(bases), len(labels)))
    for i, p in enumerate(probes):
        rho = apply(device, probe_state(p))
        for j, b in enumerate(bases):
            for k, o in enumerate(labels):
                out[i, j, k] = np.real(np.trace(outcome_projector(b, o) @ rho))
    out = np.clip(out, 0, None)
    return out / out.sum(axis=2, keepdims=True)


def allocate_shots(total: int, n_settings: int) -> np.ndarray:
    """Equal split; the remainder goes to the first settings in declaration order."""
    base, rem = divmod(int(total), n_settings)
    shots = np.full(n_settings, base, dtype=int)
    shots[:rem] += 1
    return shots


# -- sampling -------------------------------------------------------------------


def born_sample(state: np.ndarray, observable: np.ndarray, rng: np.random.Generator) -> int:
    """One +-1 measurement outcome; always consumes exactly one uniform draw."""
    state, observable = cmat(state), cmat(observable)
    if state.shape != observable.shape:
        raise DimensionMismatch("state and observable dimensions differ")
    if not is_involution(observable):
        raise NotInvolution("observable is not a Hermitian involution")
    p_plus = np.real(np.trace(projector_onto_sign(observable, 1) @ state))
    return 1 if rng.random() < p_plus else -1


def run_qgv(strategy: VerificationStrategy, device: QuantumChannel, n: int, rng: np.random.Generator) -> list[OutcomeRecord]:
    """N prepare-and-measure trials.

    Trial i consumes two uniforms in order: one selects the setting by the
    cumulative probabilities in declaration order, one draws the Born outcome.
    """
    if device.dim != strategy.gate.dim:
        raise DimensionMismatch("device and strategy act on different dimensions")
    idx, outcomes = _draw_trials(strategy, device, n, rng)
    out = []
    for i, (k, o) in enumerate(zip(idx.tolist(), outcomes.tolist())):
        s = strategy.settings[k]
        out.append(OutcomeRecord(i, s.label, o, o == s.pass_sign))
    return out


def _draw_trials(strategy, device, n, rng):
    # probability of outcome +1 for each setting
    plus = np.array(
        [np.real(np.trace(projector_onto_sign(s.observable, 1) @ apply(device, s.input_state))) for s in strategy.settings]
    )
    plus = np.clip(plus, 0.0, 1.0)
    cdf = np.cumsum(strategy.probabilities)
    cdf[-1] = 1.0
    u = rng.random((int(n), 2))
    idx = np.minimum(np.searchsorted(cdf, u[:, 0], side="right"), len(cdf) - 1)
    outcomes = np.where(u[:, 1] < plus[idx], 1, -1)
    return idx, outcomes


def count_passes(strategy: VerificationStrategy, device: QuantumChannel, n: int, rng: np.random.Generator) -> int:
    """Number of passed trials; same draws as ``run_qgv`` without building records."""
    idx, outcomes = _draw_trials(strategy, device, n, rng)
    signs = np.array([s.pass_sign for s in strategy.settings])
    return int(np.count_nonzero(outcomes == signs[idx]))


def run_qpt_counts(device: QuantumChannel, probes, bases, shots_per_setting, rng: np.random.Generator) -> CountTable:
    """Multinomial counts per (probe, basis) row.

    ``shots_per_setting`` is an int or an array in row-major (probe, basis) order.
    """
    if not is_informationally_complete(list(probes), list(bases)):
        warnings.warn("probe/basis grid is not informationally complete", NotInformationallyComplete)
    probs = setting_probabilities(device, probes, bases)
    shots = np.broadcast_to(np.asarray(shots_per_setting, dtype=int), (len(probes) * len(bases),)).reshape(len(probes), len(bases))
    counts = np.zeros_like(probs)
    for i in range(len(probes)):
        for j in range(len(bases)):
            counts[i, j] = rng.multinomial(shots[i, j], probs[i, j])
    return CountTable(list(probes), list(bases), outcome_labels(device.n_qubits), counts, device.n_qubits, shots.astype(float))


def expected_count_table(device: QuantumChannel, shots_per_setting: float = 1.0, probes=None, bases=None) -> CountTable:
    """Infinite-shot table: counts equal shots times exact probabilities."""
    if probes is None:
        probes, bases = tomography_grid(device.n_qubits)
    probs = setting_probabilities(device, probes, bases)
    return CountTable(list(probes), list(bases), outcome_labels(device.n_qubits), probs * shots_per_setting, device.n_qubits)


# -- campaigns ------------------------------------------------------------------


@dataclass(frozen=True)
class CampaignPoint:
    n: int
    repetition: int
    n_passed: int
    epsilon: float  # nan when not certifiable
    result: VerificationResult | None


@dataclass
class CampaignSummary:
    n_grid: list
    points: list  # CampaignPoint, grid-major then repetition
    delta: float
    nu: float

    def epsilons(self) -> np.ndarray:
        """Array of shape (len(n_grid), repetitions); nan where not certifiable."""
        reps = len(self.points) // len(self.n_grid)
        return np.array([p.epsilon for p in self.points]).reshape(len(self.n_grid), reps)

    def mean_sd(self) -> tuple[np.ndarray, np.ndarray]:
        """Mean and sample sd per N over repetitions; uncertifiable runs count as eps = 1."""
        e = np.nan_to_num(self.epsilons(), nan=1.0)
        sd = e.std(axis=1, ddof=1) if e.shape[1] > 1 else np.zeros(e.shape[0])
        return e.mean(axis=1), sd

    def rows(self) -> list[dict]:
        mean, sd = self.mean_sd()
        return [{"N": n, "mean_epsilon": float(m), "sd_epsilon": float(s)} for n, m, s in zip(self.n_grid, mean, sd)]


def campaign(
    strategy: VerificationStrategy,
    device: QuantumChannel,
    n_grid,
    repetitions: int,
    delta: float,
    rng: RngSpec,
) -> CampaignSummary:
    """QGV runs at every grid N for every repetition, each certified at confidence 1 - delta."""
    n_grid = [int(n) for n in n_grid]
    points = []
    for gi, n in enumerate(n_grid):
        for rep in range(repetitions):
            gen = rng.generator(rep, gi)
            m = count_passes(strategy, device, n, gen)
            try:
                res = VerificationResult(n, m, delta, strategy.nu, epsilon_at_confidence(m, n, delta, strategy.nu))
                eps = res.epsilon
            except NotCertifiable:
                res, eps = None, float("nan")
            points.append(CampaignPoint(n, rep, m, eps, res))
    return CampaignSummary(n_grid, points, delta, strategy.nu)
