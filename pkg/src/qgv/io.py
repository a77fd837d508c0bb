"""File formats: gate/noise spec JSON, outcome JSONL, count and curve CSVs, chi JSON.

Complex numbers are always written as ``[re, im]`` pairs.
"""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .channels import (
    AmplitudeDamping,
    Composite,
    Depolarizing,
    NoiseModel,
    OverRotation,
    ProcessMatrix,
    calibrate_noise,
    pauli_labels,
)
from .gates import NAMED_GATES, UnitaryGate
from .simulate import CountTable, OutcomeRecord


class FormatError(ValueError):
    pass


def complex_to_json(a) -> list:
    arr = np.asarray(a, dtype=complex)
    if arr.ndim == 0:
        return [float(arr.real), float(arr.imag)]
    return [complex_to_json(x) for x in arr]


def complex_from_json(obj) -> np.ndarray:
    arr = np.asarray(obj, dtype=float)
    if arr.shape[-1] != 2:
        raise FormatError("complex entries must be [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def dumps(obj) -> str:
    """Deterministic JSON text."""
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


# -- gate / noise spec ----------------------------------------------------------------


def parse_noise(spec: dict | None, n_qubits: int) -> NoiseModel | None:
    if not spec:
        return None
    kind = spec.get("kind")
    params = dict(spec.get("params", {}))
    if kind == "none":
        return None
    if "entanglement_fidelity" in params:
        return calibrate_noise(float(params["entanglement_fidelity"]), kind, n_qubits)
    if kind == "depolarizing":
        return Depolarizing(float(params["p"]))
    if kind == "amplitude_damping":
        return AmplitudeDamping(float(params["gamma"]))
    if kind == "over_rotation":
        return OverRotation(tuple(params["axis"]), float(params["angle"]))
    if kind == "composite":
        return Composite(tuple(parse_noise(m, n_qubits) for m in params["models"]))
    raise FormatError(f"unknown noise kind {kind!r}")


def noise_to_json(model: NoiseModel | None) -> dict:
    if model is None:
        return {"kind": "none", "params": {}}
    if isinstance(model, Depolarizing):
        return {"kind": "depolarizing", "params": {"p": model.p}}
    if isinstance(model, AmplitudeDamping):
        return {"kind": "amplitude_damping", "params": {"gamma": model.gamma}}
    if isinstance(model, OverRotation):
        return {"kind": "over_rotation", "params": {"axis": list(model.axis), "angle": model.angle}}
    return {"kind": "composite", "params": {"models": [noise_to_json(m) for m in model.models]}}


def parse_gate_spec(obj: dict) -> tuple[UnitaryGate, NoiseModel | None]:
    """``{"n_qubits": n, "unitary": [[[re, im], ...], ...] | "Ua", "noise": {...}}``."""
    try:
        u = obj["unitary"]
        if isinstance(u, str):
            if u not in NAMED_GATES:
                raise FormatError(f"unknown named gate {u!r}; known: {sorted(NAMED_GATES)}")
            gate = NAMED_GATES[u]
        else:
            m = complex_from_json(u)
            gate = UnitaryGate(int(obj["n_qubits"]), m, obj.get("name", "U"))
        if "n_qubits" in obj and int(obj["n_qubits"]) != gate.n_qubits:
            raise FormatError(f"n_qubits={obj['n_qubits']} does not match the unitary")
        return gate, parse_noise(obj.get("noise"), gate.n_qubits)
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed gate spec: {exc}") from exc


def gate_spec_to_json(gate: UnitaryGate, noise: NoiseModel | None = None) -> dict:
    return {
        "n_qubits": gate.n_qubits,
        "name": gate.name,
        "unitary": complex_to_json(gate.matrix),
        "noise": noise_to_json(noise),
    }


def load_gate_file(path) -> tuple[UnitaryGate, NoiseModel | None]:
    with open(path) as fh:
        return parse_gate_spec(json.load(fh))


# -- outcome records ------------------------------------------------------------------


def records_to_jsonl(records) -> str:
    return "".join(json.dumps(r.as_dict()) + "\n" for r in records)


def records_from_jsonl(text: str) -> list[OutcomeRecord]:
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            d = json.loads(line)
            outcome = int(d["outcome"])
            if outcome not in (1, -1) or not isinstance(d["passed"], bool):
                raise ValueError("outcome must be +-1 and passed a boolean")
            out.append(OutcomeRecord(int(d["trial"]), str(d["setting"]), outcome, d["passed"]))
        except (ValueError, KeyError, TypeError) as exc:
            raise FormatError(f"line {lineno}: {exc}") from exc
    return out


def write_records(path, records) -> None:
    Path(path).write_text(records_to_jsonl(records))


def read_records(path) -> list[OutcomeRecord]:
    return records_from_jsonl(Path(path).read_text())


# -- count tables ----------------------------------------------------------------------


def counts_to_csv(table: CountTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["probe", "basis", "outcome", "count"])
    for i, p in enumerate(table.probes):
        for j, b in enumerate(table.bases):
            for k, o in enumerate(table.outcome_labels):
                c = table.counts[i, j, k]
                w.writerow([p, b, o, int(c) if float(c).is_integer() else repr(float(c))])
    return buf.getvalue()


def counts_from_csv(text: str) -> CountTable:
    rows = list(csv.DictReader(io.StringIO(text)))
    if not rows or set(rows[0]) != {"probe", "basis", "outcome", "count"}:
        raise FormatError("count CSV needs header probe,basis,outcome,count")
    probes, bases, outcomes = [], [], []
    for r in rows:
        for lst, key in ((probes, "probe"), (bases, "basis"), (outcomes, "outcome")):
            if r[key] not in lst:
                lst.append(r[key])
    n = len(probes[0])
    if any(len(p) != n for p in probes) or any(len(b) != n for b in bases) or any(len(o) != n for o in outcomes):
        raise FormatError("inconsistent qubit counts in labels")
    from .simulate import outcome_labels

    labels = outcome_labels(n)
    counts = np.zeros((len(probes), len(bases), len(labels)))
    for r in rows:
        try:
            counts[probes.index(r["probe"]), bases.index(r["basis"]), labels.index(r["outcome"])] = float(r["count"])
        except ValueError as exc:
            raise FormatError(f"bad row {r}: {exc}") from exc
    return CountTable(probes, bases, labels, counts, n)


# -- results / curves -----------------------------------------------------------------


def rows_to_csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def chi_to_json(chi: ProcessMatrix, **extra) -> dict:
    return {
        "n_qubits": chi.n_qubits,
        "basis": list(pauli_labels(chi.n_qubits)),
        "convention": "rho -> sum_mn chi[m][n] P_m rho P_n, Tr(chi) = 1, qubit 1 leftmost",
        "chi": complex_to_json(chi.chi),
        **extra,
    }


def chi_from_json(obj: dict) -> ProcessMatrix:
    return ProcessMatrix(int(obj["n_qubits"]), complex_from_json(obj["chi"]))
