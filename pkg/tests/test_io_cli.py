import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qgv import io as qio
from qgv.certify import epsilon_perfect_closed_form
from qgv.channels import AmplitudeDamping, Composite, Depolarizing, OverRotation, calibrate_noise, device_channel
from qgv.cli import CampaignConfig, InputError, load_config, main
from qgv.gates import CNOT, UA, UnitaryGate
from qgv.simulate import OutcomeRecord, RngSpec, campaign, expected_count_table, run_qgv
from qgv.verification import single_qubit_strategy


def _write(path, obj):
    path.write_text(json.dumps(obj))
    return path


@pytest.fixture
def ua_gate_file(tmp_path):
    return _write(tmp_path / "ua.json", qio.gate_spec_to_json(UA))


@pytest.fixture
def ua_config(tmp_path):
    cfg = {
        "gate": {"unitary": "Ua", "noise": {"kind": "depolarizing", "params": {"entanglement_fidelity": 0.98}}},
        "protocol": "qgv",
        "n_grid": [50, 100, 200],
        "repetitions": 5,
        "delta": 0.01,
        "seed": 17,
        "out": str(tmp_path / "out"),
    }
    return _write(tmp_path / "cfg.json", cfg)


# -- formats ------------------------------------------------------------------------


@settings(max_examples=30)
@given(st.lists(st.tuples(st.text(min_size=1, max_size=12), st.sampled_from([1, -1]), st.booleans()), max_size=30))
def test_records_roundtrip(items):
    recs = [OutcomeRecord(i, lab, o, p) for i, (lab, o, p) in enumerate(items)]
    text = qio.records_to_jsonl(recs)
    assert qio.records_from_jsonl(text) == recs
    assert qio.records_to_jsonl(qio.records_from_jsonl(text)) == text


def test_records_bad_line():
    with pytest.raises(qio.FormatError, match="line 2"):
        qio.records_from_jsonl('{"trial":0,"setting":"a","outcome":1,"passed":true}\n{"trial":1}\n')
    with pytest.raises(qio.FormatError):
        qio.records_from_jsonl('{"trial":0,"setting":"a","outcome":3,"passed":true}\n')


@pytest.mark.parametrize(
    "noise",
    [None, Depolarizing(0.1), AmplitudeDamping(0.2), OverRotation((0.0, 1.0, 0.0), 0.3), Composite((Depolarizing(0.1), AmplitudeDamping(0.05)))],
)
def test_gate_spec_roundtrip(noise):
    gate, back = qio.parse_gate_spec(json.loads(json.dumps(qio.gate_spec_to_json(UA, noise))))
    assert np.allclose(gate.matrix, UA.matrix)
    assert back == noise


def test_gate_spec_errors():
    with pytest.raises(qio.FormatError):
        qio.parse_gate_spec({"unitary": "nope"})
    with pytest.raises(qio.FormatError):
        qio.parse_gate_spec({"n_qubits": 2, "unitary": "Ua"})
    with pytest.raises(qio.FormatError):
        qio.parse_gate_spec({"n_qubits": 1})


def test_noise_calibration_via_spec():
    assert qio.parse_noise({"kind": "depolarizing", "params": {"entanglement_fidelity": 0.98}}, 1) == calibrate_noise(0.98)


def test_counts_csv_roundtrip():
    t = expected_count_table(device_channel(CNOT, Depolarizing(0.1)), 10.0)
    back = qio.counts_from_csv(qio.counts_to_csv(t))
    assert back.probes == t.probes and back.bases == t.bases
    assert np.allclose(back.counts, t.counts, rtol=0, atol=0)


def test_counts_csv_bad_header():
    with pytest.raises(qio.FormatError):
        qio.counts_from_csv("a,b\n1,2\n")


def test_chi_json_roundtrip():
    from qgv.channels import channel_to_chi

    chi = channel_to_chi(device_channel(UA, Depolarizing(0.2)))
    back = qio.chi_from_json(json.loads(qio.dumps(qio.chi_to_json(chi))))
    assert np.array_equal(back.chi, chi.chi)


def test_config_validation(tmp_path):
    with pytest.raises(InputError):
        CampaignConfig(gate=UA, noise=None, n_grid=[100, 50])
    with pytest.raises(InputError):
        CampaignConfig(gate=UA, noise=None, delta=1.5)
    with pytest.raises(InputError):
        load_config(_write(tmp_path / "c.json", {"n_grid": [1]}))


def test_config_gate_file_relative(tmp_path, ua_gate_file):
    cfg = load_config(_write(tmp_path / "c.json", {"gate": "ua.json", "n_grid": [10]}))
    assert np.allclose(cfg.gate.matrix, UA.matrix)


# -- commands ----------------------------------------------------------------------


def _run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_cli_strategy_single_qubit(ua_gate_file, capsys):
    code, out, _ = _run(["strategy", ua_gate_file], capsys)
    d = json.loads(out)
    assert code == 0
    assert d["n_settings"] == 6 and d["qpt_settings"] == 18
    assert d["nu"] == pytest.approx(2 / 3, abs=1e-9)


def test_cli_strategy_identity(tmp_path, capsys):
    f = _write(tmp_path / "id.json", {"unitary": "I"})
    d = json.loads(_run(["strategy", f], capsys)[1])
    assert d["n_settings"] == 6 and len(d["distinct_bases"]) == 3
    obs = {s["basis"]: qio.complex_from_json(s["observable"]) for s in d["settings"]}
    from qgv.linalg import X, Y, Z

    assert all(any(np.allclose(o, p) for o in obs.values()) for p in (X, Y, Z))


def test_cli_strategy_cnot(tmp_path, capsys):
    f = _write(tmp_path / "cnot.json", {"unitary": "CNOT"})
    d = json.loads(_run(["strategy", f], capsys)[1])
    assert d["n_settings"] == 16 and d["qpt_settings"] == 324
    assert len(d["distinct_bases"]) == 4


def test_cli_strategy_bad_file(tmp_path, capsys):
    f = tmp_path / "bad.json"
    f.write_text("{not json")
    assert _run(["strategy", f], capsys)[0] == 1


def test_cli_verify_all_pass(tmp_path, capsys):
    recs = tmp_path / "r.jsonl"
    qio.write_records(recs, [OutcomeRecord(i, "s", 1, True) for i in range(231)])
    code, out, _ = _run(["verify", "--records", recs, "--nu", 2 / 3, "--delta", 0.01], capsys)
    d = json.loads(out)
    assert code == 0
    assert d["N"] == 231 and d["M"] == 231
    assert d["epsilon"] == pytest.approx(epsilon_perfect_closed_form(231, 0.01, 2 / 3), abs=1e-8)
    assert d["epsilon"] == pytest.approx(0.0296, abs=1e-4)


def test_cli_verify_not_certifiable(tmp_path, capsys):
    recs = tmp_path / "r.jsonl"
    # M/N = 0.3 < 1 - nu
    qio.write_records(recs, [OutcomeRecord(i, "s", 1, i % 10 < 3) for i in range(100)])
    code, out, _ = _run(["verify", "--records", recs, "--nu", 2 / 3], capsys)
    assert code == 2
    assert json.loads(out)["certified"] is False


def test_cli_verify_parse_error(tmp_path, capsys):
    recs = tmp_path / "r.jsonl"
    recs.write_text("garbage\n")
    assert _run(["verify", "--records", recs, "--nu", 0.5], capsys)[0] == 1
    assert _run(["verify", "--nu", 0.5], capsys)[0] == 1


def test_cli_simulate_replay_matches_campaign(ua_config, tmp_path, capsys):
    recs = tmp_path / "sim.jsonl"
    assert _run(["simulate", ua_config, "--n", 100, "--repetition", 3, "--records", recs], capsys)[0] == 0
    cfg = load_config(ua_config)
    device = device_channel(cfg.gate, cfg.noise)
    c = campaign(single_qubit_strategy(UA), device, cfg.n_grid, 4, 0.01, RngSpec(17))
    point = next(p for p in c.points if p.n == 100 and p.repetition == 3)
    code, out, _ = _run(["verify", "--records", recs, "--nu", 2 / 3, "--delta", 0.01], capsys)
    d = json.loads(out)
    assert d["M"] == point.n_passed
    assert d["epsilon"] == point.epsilon


def test_cli_simulate_byte_identical(ua_config, tmp_path, capsys):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    _run(["simulate", ua_config, "--records", a], capsys)
    _run(["simulate", ua_config, "--records", b], capsys)
    assert a.read_bytes() == b.read_bytes()
    recs = qio.read_records(a)
    assert len(recs) == 200
    assert recs == run_qgv(single_qubit_strategy(UA), device_channel(UA, calibrate_noise(0.98)), 200, RngSpec(17).generator(0, 2))


def test_cli_scaling_deterministic(ua_config, tmp_path, capsys):
    out_a, out_b = tmp_path / "A", tmp_path / "B"
    assert _run(["scaling", ua_config, "--out", out_a], capsys)[0] == 0
    assert _run(["scaling", ua_config, "--out", out_b], capsys)[0] == 0
    names = sorted(p.name for p in out_a.iterdir())
    assert names == ["qgv_curve.csv", "qgv_fit.json", "qgv_results.csv", "summary.json"]
    for n in names:
        assert (out_a / n).read_bytes() == (out_b / n).read_bytes()
    fit = json.loads((out_a / "qgv_fit.json").read_text())
    assert fit["slope"] < 0 and fit["n_points"] == 3


def test_cli_scaling_seed_override_changes_output(ua_config, tmp_path, capsys):
    _run(["scaling", ua_config, "--out", tmp_path / "A"], capsys)
    _run(["scaling", ua_config, "--out", tmp_path / "B", "--seed", 18], capsys)
    assert (tmp_path / "A/qgv_results.csv").read_bytes() != (tmp_path / "B/qgv_results.csv").read_bytes()


def test_cli_counts_then_qpt(ua_config, tmp_path, capsys):
    counts = tmp_path / "counts.csv"
    gate = _write(tmp_path / "g.json", {"unitary": "Ua"})
    assert _run(["counts", ua_config, "--shots", 36000, "--out", counts], capsys)[0] == 0
    code, out, _ = _run(["qpt", counts, "--gate", gate], capsys)
    d = json.loads(out)
    assert code == 0
    assert d["basis"] == ["I", "X", "Y", "Z"]
    assert d["entanglement_fidelity"] == pytest.approx(0.98, abs=0.01)
    assert d["tp_residual"] <= 1e-6


def test_cli_missing_config(tmp_path, capsys):
    assert _run(["scaling", tmp_path / "nope.json"], capsys)[0] == 1


def test_custom_unitary_gate_file(tmp_path, capsys):
    rng = np.random.default_rng(0)
    from qgv.gates import random_unitary

    g = UnitaryGate(1, random_unitary(2, rng), "rand")
    f = _write(tmp_path / "r.json", qio.gate_spec_to_json(g))
    d = json.loads(_run(["strategy", f], capsys)[1])
    assert d["nu"] == pytest.approx(2 / 3, abs=1e-9)
