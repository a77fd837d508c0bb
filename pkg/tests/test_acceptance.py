"""Acceptance criteria, each checked at its stated tolerance and runtime budget.

Every test records a single verdict line; the lines are gathered in the
"acceptance criteria" section of the pytest terminal summary. Run alone with

    pytest tests/test_acceptance.py -v
"""
import json
import time

import numpy as np
import pytest

from qgv import io as qio
from qgv.certify import NotCertifiable, delta_bound, epsilon_at_confidence, loglog_fit, min_samples_perfect
from qgv.channels import (
    calibrate_noise,
    channel_to_chi,
    device_channel,
    process_fidelity,
    unitary_channel,
)
from qgv.cli import main
from qgv.gates import CHI_PRINTED, CNOT, UA, UB, UnitaryGate, random_unitary
from qgv.linalg import PAULIS
from qgv.simulate import RngSpec, campaign, count_passes, expected_count_table, tomography_grid
from qgv.tomography import mle_reconstruct, qpt_epsilon_curve, required_samples
from qgv.verification import cnot_strategy, conjugated_observable, single_qubit_strategy

SEED = 20240611
DELTA = 0.01
TARGET_EPS = 0.03

# QGV grid: dense enough that "smallest grid N" is resolved to 10 (50 above 500)
QGV_GRID = list(range(20, 500, 10)) + list(range(500, 6001, 50))
QPT_FIT_GRID = [20, 30, 50, 70, 100, 150, 200, 300, 400, 499]
QPT_LONG_GRID = list(range(2000, 100_001, 2000))
CNOT_GRID = [25, 50, 100, 200, 400, 800, 1600, 3200, 6400]


def verdict(record_property, number, ok, detail, elapsed=None, budget=None):
    if budget is not None:
        ok = ok and elapsed < budget
        detail += f"; {elapsed:.2f}s (budget {budget:g}s)"
    line = f"[C{number}] {'PASS' if ok else 'FAIL'} {detail}"
    record_property("acceptance", line)
    print(line)
    return ok


@pytest.fixture(scope="module")
def ua_device():
    return device_channel(UA, calibrate_noise(0.98))


@pytest.fixture(scope="module")
def qgv_campaign(ua_device):
    t0 = time.perf_counter()
    c = campaign(single_qubit_strategy(UA), ua_device, QGV_GRID, 50, DELTA, RngSpec(SEED))
    return c, time.perf_counter() - t0


@pytest.fixture(scope="module")
def qpt_fit_curve(ua_device):
    t0 = time.perf_counter()
    curve = qpt_epsilon_curve(ua_device, UA, QPT_FIT_GRID, 15, DELTA, RngSpec(SEED, 1))
    return curve, time.perf_counter() - t0


@pytest.fixture(scope="module")
def qpt_long_curve(ua_device):
    t0 = time.perf_counter()
    curve = qpt_epsilon_curve(ua_device, UA, QPT_LONG_GRID, 15, DELTA, RngSpec(SEED, 2))
    return curve, time.perf_counter() - t0


def _qgv_required_n(c):
    return next((r["N"] for r in c.rows() if r["mean_epsilon"] <= TARGET_EPS), None)


def test_c1_spectral_gap(record_property):
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    gates = [UA, UB] + [UnitaryGate(1, random_unitary(2, rng), f"r{i}") for i in range(20)]
    worst_nu, worst_spec = 0.0, 0.0
    for g in gates:
        s = single_qubit_strategy(g)
        spec = np.sort(np.linalg.eigvalsh(s.omega))[::-1]
        worst_nu = max(worst_nu, abs(s.nu - 2 / 3))
        worst_spec = max(worst_spec, np.max(np.abs(spec - [1, 1 / 3, 1 / 3, 1 / 3])))
    ok = worst_nu <= 1e-9 and worst_spec <= 1e-9
    assert verdict(
        record_property, 1, ok, f"spectral gap 2/3 for {len(gates)} gates, max |nu-2/3|={worst_nu:.1e}, max spectrum dev={worst_spec:.1e}",
        time.perf_counter() - t0, 1,
    )


def test_c2_basis_consistency(record_property):
    t0 = time.perf_counter()
    worst = 0.0
    for (tag, axis_idx, sign), printed in CHI_PRINTED.items():
        gate = {"a": UA, "b": UB}[tag]
        obs = conjugated_observable(gate, PAULIS["_ZXY"[axis_idx]])
        w, vecs = np.linalg.eigh(obs)
        v = vecs[:, np.argmin(np.abs(w - sign))]
        p = np.asarray(printed) / np.linalg.norm(printed)
        ph = np.vdot(v, p)
        worst = max(worst, np.linalg.norm(v * ph / abs(ph) - p))
    ok = worst <= 1e-3 and len(CHI_PRINTED) == 12
    assert verdict(record_property, 2, ok, f"12 printed basis vectors, max phase-aligned distance {worst:.2e}", time.perf_counter() - t0, 1)


def test_c3_bound_algebra(record_property):
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    worst, tight = 0.0, True
    for _ in range(1000):
        n = int(rng.integers(1, 5000))
        nu = float(rng.uniform(0.05, 1.0))
        eps = float(rng.uniform(0, 1))
        worst = max(worst, abs(delta_bound(n, n, eps, nu) - (1 - eps * nu) ** n))
    checked = 0
    while checked < 1000:
        n = int(rng.integers(50, 5000))
        nu = float(rng.uniform(0.1, 1.0))
        m = int(rng.integers(int(np.ceil(n * (1 - nu / 2))), n + 1))
        delta = float(10 ** rng.uniform(-4, -0.5))
        try:
            e = epsilon_at_confidence(m, n, delta, nu)
        except NotCertifiable:
            # no eps in the admissible range reaches delta; outside the inversion's domain
            continue
        tight &= delta_bound(m, n, e, nu) <= delta and delta_bound(m, n, e - 1e-6, nu) > delta
        checked += 1
    n231 = min_samples_perfect(0.03, 0.01, 2 / 3)
    ok = worst <= 1e-12 and tight and n231 == 231
    assert verdict(
        record_property, 3, ok, f"max |delta(M=N)-(1-eps nu)^N|={worst:.1e}, inversion tight={tight}, N_min={n231}",
        time.perf_counter() - t0, 1,
    )


def test_c4_sample_count(record_property, qgv_campaign):
    c, elapsed = qgv_campaign
    n_req = _qgv_required_n(c)
    ok = n_req is not None and 231 <= n_req <= 700
    assert verdict(
        record_property, 4, ok, f"smallest N with mean eps <= {TARGET_EPS}: {n_req} (required in [231, 700])", elapsed, 60
    )


def test_c5_scaling_slopes(record_property, qgv_campaign, qpt_fit_curve):
    c, t_qgv = qgv_campaign
    curve, t_qpt = qpt_fit_curve
    qgv = loglog_fit([(r["N"], r["mean_epsilon"]) for r in c.rows()], (0, 500))
    qpt = loglog_fit([(p.n_total_samples, p.infidelity_upper_99) for p in curve], (0, 500))
    ok_qgv = -1.0 <= qgv.slope <= -0.85
    ok_qpt = -0.75 <= qpt.slope <= -0.45
    assert verdict(
        record_property, 5, ok_qgv and ok_qpt,
        f"QGV slope {qgv.slope:.3f}+-{qgv.slope_stderr:.3f} ({'in' if ok_qgv else 'outside'} [-1, -0.85]), "
        f"QPT slope {qpt.slope:.3f}+-{qpt.slope_stderr:.3f} ({'in' if ok_qpt else 'outside'} [-0.75, -0.45])",
        t_qgv + t_qpt, 600,
    )


def test_c6_efficiency_gap(record_property, qgv_campaign, qpt_long_curve):
    c, t_qgv = qgv_campaign
    curve, t_qpt = qpt_long_curve
    n_qgv = _qgv_required_n(c)
    n_qpt = required_samples(curve, TARGET_EPS)
    ok = n_qgv is not None and n_qpt is not None and n_qpt >= 5 * n_qgv
    ratio = f"{n_qpt / n_qgv:.1f}x" if n_qgv and n_qpt else "n/a"
    assert verdict(record_property, 6, ok, f"N at eps={TARGET_EPS}: QPT {n_qpt} vs QGV {n_qgv} ({ratio}, need >= 5x)", t_qgv + t_qpt, 600)


def test_c7_setting_counts(record_property, tmp_path, capsys):
    t0 = time.perf_counter()
    counts = {}
    for name in ("Ua", "CNOT"):
        f = tmp_path / f"{name}.json"
        f.write_text(json.dumps({"unitary": name}))
        assert main(["strategy", str(f)]) == 0
        d = json.loads(capsys.readouterr().out)
        counts[name] = (d["n_settings"], d["qpt_settings"])
    p1, b1 = tomography_grid(1)
    p2, b2 = tomography_grid(2)
    ok = counts == {"Ua": (6, 18), "CNOT": (16, 324)} and len(p1) * len(b1) == 18 and len(p2) * len(b2) == 324
    assert verdict(record_property, 7, ok, f"QGV vs QPT settings: 1-qubit {counts['Ua']}, CNOT {counts['CNOT']}", time.perf_counter() - t0, 1)


def test_c8_mle_oracle(record_property):
    t0 = time.perf_counter()
    worst_f, worst_tp, worst_pos = 1.0, 0.0, 0.0
    for dev in (unitary_channel(UA), device_channel(UA, calibrate_noise(0.98))):
        res = mle_reconstruct(expected_count_table(dev, 1000.0))
        worst_f = min(worst_f, process_fidelity(channel_to_chi(dev), res.chi))
        worst_tp = max(worst_tp, res.tp_residual)
        worst_pos = min(worst_pos, res.chi.min_eigenvalue())
    ok = worst_f >= 0.9999 and worst_tp <= 1e-6 and worst_pos >= -1e-8
    assert verdict(
        record_property, 8, ok, f"min fidelity {worst_f:.8f}, max TP residual {worst_tp:.1e}, min eigenvalue {worst_pos:.1e}",
        time.perf_counter() - t0, 60,
    )


def test_c9_ideal_gate_certainty(record_property):
    t0 = time.perf_counter()
    n = 10_000
    m1 = count_passes(single_qubit_strategy(UA), unitary_channel(UA), n, RngSpec(SEED).generator(0))
    m2 = count_passes(cnot_strategy(), unitary_channel(CNOT), n, RngSpec(SEED).generator(1))
    ok = m1 == n and m2 == n
    assert verdict(record_property, 9, ok, f"ideal gates pass {m1}/{n} (Ua) and {m2}/{n} (CNOT)", time.perf_counter() - t0, 10)


def test_c10_cnot_campaign(record_property):
    t0 = time.perf_counter()
    dev = device_channel(CNOT, calibrate_noise(0.87, n_qubits=2))
    c = campaign(cnot_strategy(), dev, CNOT_GRID, 50, DELTA, RngSpec(SEED, 3))
    mean, sd = c.mean_sd()
    eps = np.nan_to_num(c.epsilons(), nan=1.0)
    monotone = bool(np.all(np.diff(mean) <= 0))
    sound = bool(np.all(eps.min(axis=1) >= 0.13 - 3 * sd))
    ok = monotone and sound
    assert verdict(
        record_property, 10, ok,
        f"mean eps {mean[0]:.3f} -> {mean[-1]:.3f} monotone={monotone}, smallest single eps {eps.min():.3f} "
        f"vs 0.13 - 3 sd, sound={sound}",
        time.perf_counter() - t0, 300,
    )


def test_c11_determinism(record_property, tmp_path, capsys, ua_device, qgv_campaign):
    t0 = time.perf_counter()
    c, _ = qgv_campaign
    again = campaign(single_qubit_strategy(UA), ua_device, QGV_GRID, 50, DELTA, RngSpec(SEED))
    cols = ["N", "mean_epsilon", "sd_epsilon"]
    same_campaign = qio.rows_to_csv(c.rows(), cols) == qio.rows_to_csv(again.rows(), cols)

    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "gate": {"unitary": "Ua", "noise": {"kind": "depolarizing", "params": {"entanglement_fidelity": 0.98}}},
        "protocol": "both", "n_grid": [20, 50, 100, 200], "repetitions": 10, "qpt_repetitions": 3,
        "delta": DELTA, "seed": SEED, "threshold": 0.3,
    }))
    for out in ("A", "B"):
        assert main(["scaling", str(cfg), "--out", str(tmp_path / out)]) == 0
    capsys.readouterr()
    files = sorted(p.name for p in (tmp_path / "A").iterdir())
    same_files = all((tmp_path / "A" / f).read_bytes() == (tmp_path / "B" / f).read_bytes() for f in files)
    ok = same_campaign and same_files and len(files) == 6
    assert verdict(
        record_property, 11, ok, f"campaign CSV identical={same_campaign}, {len(files)} scaling outputs byte-identical={same_files}",
        time.perf_counter() - t0,
    )
