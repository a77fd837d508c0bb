"""Process tomography baseline: linear inversion and maximum-likelihood chi.

Internally the estimators work with the normalised Choi state
rho_J = (Lambda (x) id)(|Phi><Phi|), which is the chi matrix written in the
Bell-like basis v_m = (P_m (x) I)|Phi>; ``chi = V^dag rho_J V``. A probe rho
measured with effect E has probability d * Tr[(E (x) rho^T) rho_J].
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import optimize, stats

from .channels import ProcessMatrix, QuantumChannel, channel_to_chi, pauli_basis, process_fidelity
from .gates import UnitaryGate
from .simulate import (
    CountTable,
    RngSpec,
    allocate_shots,
    outcome_projector,
    probe_state,
    run_qpt_counts,
    tomography_grid,
)


class RankDeficient(ValueError):
    pass


class DidNotConverge(RuntimeWarning):
    pass


@dataclass(frozen=True)
class MleOptions:
    max_iterations: int = 5000
    tolerance: float = 1e-10  # on the per-shot log-likelihood change
    floor: float = 1e-12
    tp_tolerance: float = 1e-6
    mu_start: float = 10.0
    mu_max: float = 1e12
    seed_mixing: float = 1e-3

    def __post_init__(self):
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")


@dataclass
class MleResult:
    chi: ProcessMatrix
    log_likelihood: float
    converged: bool
    tp_residual: float
    n_stages: int
    history: list = field(default_factory=list)


@dataclass(frozen=True)
class QptCurvePoint:
    n_total_samples: int
    mean_infidelity: float
    infidelity_upper_99: float
    sd_infidelity: float = 0.0


# -- representation helpers ------------------------------------------------------


@lru_cache(maxsize=None)
def _bell_basis(n_qubits: int) -> np.ndarray:
    d = 2**n_qubits
    phi = np.eye(d).reshape(d * d) / np.sqrt(d)
    v = np.array([np.kron(p, np.eye(d)) @ phi for p in pauli_basis(n_qubits)]).T
    v.setflags(write=False)
    return v


def choi_to_chi(rho_j: np.ndarray, n_qubits: int) -> ProcessMatrix:
    v = _bell_basis(n_qubits)
    return ProcessMatrix(n_qubits, v.conj().T @ rho_j @ v)


def chi_to_choi(chi: ProcessMatrix) -> np.ndarray:
    v = _bell_basis(chi.n_qubits)
    return v @ chi.chi @ v.conj().T


def partial_trace_output(rho_j: np.ndarray, d: int) -> np.ndarray:
    return np.einsum("aiaj->ij", rho_j.reshape(d, d, d, d))


def _design(table: CountTable):
    """Rows of the linear map vec(rho_J) -> outcome probabilities, plus counts."""
    d = 2**table.n_qubits
    rows, counts = [], []
    for i, p in enumerate(table.probes):
        rho_t = probe_state(p).T
        for j, b in enumerate(table.bases):
            for k, o in enumerate(table.outcome_labels):
                g = d * np.kron(outcome_projector(b, o), rho_t)
                rows.append(g.T.reshape(-1))
                counts.append(table.counts[i, j, k])
    return np.array(rows), np.array(counts, dtype=float)


def _hermitian_basis(n_qubits: int) -> np.ndarray:
    """Pauli strings on 2n qubits, scaled so Tr(B_k B_l) = delta_kl."""
    ps = pauli_basis(2 * n_qubits)
    return ps / np.sqrt(ps.shape[1])


def _frequencies(table: CountTable) -> np.ndarray:
    shots = table.counts.sum(axis=2, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        f = np.where(shots > 0, table.counts / np.where(shots > 0, shots, 1), 0.0)
    return f, shots[..., 0] > 0


def linear_inversion(counts: CountTable) -> ProcessMatrix:
    """Least-squares chi from observed frequencies; Hermitian but possibly not positive."""
    n = counts.n_qubits
    a, _ = _design(counts)
    f, observed = _frequencies(counts)
    keep = np.repeat(observed.reshape(-1), len(counts.outcome_labels))
    basis = _hermitian_basis(n)
    a_real = np.real(a @ basis.reshape(basis.shape[0], -1).T)[keep]
    if np.linalg.matrix_rank(a_real, tol=1e-9) < basis.shape[0]:
        raise RankDeficient("probe/basis grid does not determine the process")
    x, *_ = np.linalg.lstsq(a_real, f.reshape(-1)[keep], rcond=None)
    rho_j = np.einsum("k,kij->ij", x, basis)
    rho_j = (rho_j + rho_j.conj().T) / 2
    return choi_to_chi(rho_j, n)


# -- maximum likelihood ------------------------------------------------------------


def log_likelihood(chi: ProcessMatrix, counts: CountTable, floor: float = 1e-12) -> float:
    a, c = _design(counts)
    p = np.real(a @ chi_to_choi(chi).reshape(-1))
    return float(c @ np.log(np.clip(p, 0, None) + floor))


def project_cptp(rho_j: np.ndarray, d: int, mixing: float = 0.0) -> np.ndarray:
    """Clip negative eigenvalues, optionally mix with the identity, then rescale to trace preserving."""
    w, v = np.linalg.eigh((rho_j + rho_j.conj().T) / 2)
    w = np.clip(w, 0, None)
    if w.sum() <= 0:
        w = np.ones_like(w)
    rho = (v * w) @ v.conj().T / w.sum()
    if mixing:
        rho = (1 - mixing) * rho + mixing * np.eye(d * d) / (d * d)
    return _tp_polish(rho, d)


def _tp_polish(rho_j: np.ndarray, d: int) -> np.ndarray:
    """(I (x) M^{-1/2}) rho_J (I (x) M^{-1/2}) with M = d Tr_out(rho_J); exactly TP, stays positive."""
    m = d * partial_trace_output(rho_j, d)
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    w = np.clip(w, 1e-15, None)
    s = (v / np.sqrt(w)) @ v.conj().T
    k = np.kron(np.eye(d), s)
    out = k @ rho_j @ k.conj().T
    return (out + out.conj().T) / 2


def mle_reconstruct(counts: CountTable, options: MleOptions | None = None) -> MleResult:
    """Maximum-likelihood CPTP chi.

    Positivity comes from rho_J = T^dag T / Tr(T^dag T). Trace preservation is
    driven by a quadratic penalty whose weight is raised tenfold per stage until
    the residual is below ``tp_tolerance``; a final congruence makes it exact.
    Each stage is a quasi-Newton (L-BFGS) ascent with line search.
    """
    opts = options or MleOptions()
    n = counts.n_qubits
    d = 2**n
    dd = d * d
    a, c = _design(counts)
    total = max(c.sum(), 1.0)
    w = c / total
    eye_d = np.eye(d)

    try:
        seed = chi_to_choi(linear_inversion(counts))
    except RankDeficient:
        seed = np.eye(dd) / dd
    seed_phys = project_cptp(seed, d)
    start = project_cptp(seed, d, mixing=opts.seed_mixing)

    w_eig, v_eig = np.linalg.eigh(start)
    t0 = (v_eig * np.sqrt(np.clip(w_eig, 0, None))) @ v_eig.conj().T

    def unpack(x):
        return (x[: dd * dd] + 1j * x[dd * dd:]).reshape(dd, dd)

    def objective(x, mu):
        t = unpack(x)
        tau = np.real(np.vdot(t, t))
        rho = t.conj().T @ t / tau
        p = np.real(a @ rho.reshape(-1))
        p_safe = np.clip(p, 0, None) + opts.floor
        r = partial_trace_output(rho, d) - eye_d / d
        f = -w @ np.log(p_safe) + mu * np.real(np.vdot(r, r))
        # dF/drho as a Hermitian matrix H with dF = Re Tr(H drho)
        coef = -(w / p_safe)
        h = (coef @ a).reshape(dd, dd).T
        h = h + 2 * mu * np.kron(eye_d, r)
        h = (h + h.conj().T) / 2
        hbar = np.real(np.trace(h @ rho))
        g = 2 * t @ (h - hbar * np.eye(dd)) / tau
        return f, np.concatenate([g.real.ravel(), g.imag.ravel()])

    x = np.concatenate([t0.real.ravel(), t0.imag.ravel()])
    mu = opts.mu_start
    history = []
    converged = False
    stages = 0
    while True:
        stages += 1
        res = optimize.minimize(
            objective,
            x,
            args=(mu,),
            jac=True,
            method="L-BFGS-B",
            options={"maxiter": opts.max_iterations, "ftol": opts.tolerance * 1e-3, "gtol": 1e-12, "maxcor": 30},
        )
        x = res.x
        t = unpack(x)
        rho = t.conj().T @ t / np.real(np.vdot(t, t))
        resid = float(np.linalg.norm(partial_trace_output(rho, d) - eye_d / d))
        history.append({"mu": mu, "tp_residual": resid, "nit": int(res.nit), "success": bool(res.success)})
        if resid <= opts.tp_tolerance:
            converged = bool(res.success) or res.nit < opts.max_iterations
            break
        if mu >= opts.mu_max:
            break
        mu *= 10

    rho = _tp_polish(rho, d)
    chi = choi_to_chi(rho, n)
    ll = log_likelihood(chi, counts, opts.floor)
    seed_chi = choi_to_chi(seed_phys, n)
    seed_ll = log_likelihood(seed_chi, counts, opts.floor)
    if seed_ll > ll:
        chi, ll = seed_chi, seed_ll
    if not converged:
        import warnings

        warnings.warn(f"MLE stopped with TP residual {resid:.2e} at mu={mu:.1e}", DidNotConverge)
    return MleResult(chi, ll, converged, chi.tp_residual(), stages, history)


# -- QPT infidelity curve ------------------------------------------------------------


def qpt_infidelities(
    device: QuantumChannel,
    target: UnitaryGate,
    n_total: int,
    repetitions: int,
    rng: RngSpec,
    grid_index: int = 0,
    options: MleOptions | None = None,
) -> np.ndarray:
    """1 - F_e of the MLE estimate for each repetition at a total budget of N shots."""
    probes, bases = tomography_grid(device.n_qubits)
    shots = allocate_shots(n_total, len(probes) * len(bases))
    ideal = channel_to_chi(QuantumChannel(target.n_qubits, (target.matrix,)))
    out = np.empty(repetitions)
    for rep in range(repetitions):
        gen = rng.generator(rep, grid_index, 1)
        table = run_qpt_counts(device, probes, bases, shots, gen)
        est = mle_reconstruct(table, options).chi
        out[rep] = 1.0 - process_fidelity(ideal, est)
    return out


def qpt_epsilon_curve(
    device: QuantumChannel,
    target: UnitaryGate,
    n_grid,
    repetitions: int,
    delta: float,
    rng: RngSpec,
    options: MleOptions | None = None,
) -> list[QptCurvePoint]:
    """Mean infidelity and one-sided normal upper bound mean + z_{1-delta} sd per total budget N."""
    z = float(stats.norm.ppf(1 - delta))
    points = []
    for gi, n in enumerate(n_grid):
        inf = qpt_infidelities(device, target, int(n), repetitions, rng, gi, options)
        sd = float(inf.std(ddof=1)) if repetitions > 1 else 0.0
        mean = float(inf.mean())
        points.append(QptCurvePoint(int(n), mean, max(mean + z * sd, mean), sd))
    return points


def required_samples(curve, threshold: float, attr: str = "infidelity_upper_99") -> int | None:
    """Smallest grid N whose curve value is at or below the threshold."""
    for pt in curve:
        v = getattr(pt, attr) if not isinstance(pt, dict) else pt[attr]
        if v <= threshold and not math.isnan(v):
            return pt.n_total_samples if not isinstance(pt, dict) else pt["N"]
    return None
