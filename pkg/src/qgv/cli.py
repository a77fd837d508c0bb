"""Command-line front end.

Exit codes: 0 ok / certified, 1 input error, 2 not certifiable.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import io as qio
from .certify import NotCertifiable, certify, loglog_fit
from .channels import channel_to_chi, device_channel, entanglement_fidelity, process_fidelity, unitary_channel
from .gates import UnitaryGate
from .simulate import RngSpec, campaign, run_qgv, tomography_grid
from .tomography import MleOptions, mle_reconstruct, qpt_epsilon_curve, required_samples
from .verification import cnot_strategy, single_qubit_strategy, strategy_to_dict

EXIT_OK, EXIT_INPUT, EXIT_NOT_CERTIFIABLE = 0, 1, 2


class InputError(Exception):
    pass


@dataclass
class CampaignConfig:
    gate: UnitaryGate
    noise: object
    protocol: str = "both"
    n_grid: list = field(default_factory=list)
    qpt_n_grid: list = field(default_factory=list)
    repetitions: int = 50
    qpt_repetitions: int = 15
    delta: float = 0.01
    seed: int = 0
    fit_range: tuple = (0, 500)
    threshold: float | None = None
    out: Path = Path("out")

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise InputError(f"delta={self.delta} outside (0, 1)")
        for name in ("n_grid", "qpt_n_grid"):
            g = getattr(self, name)
            if any(b <= a for a, b in zip(g, g[1:])) or any(n < 1 for n in g):
                raise InputError(f"{name} must be strictly increasing positive integers")
        if self.protocol not in ("qgv", "qpt", "both"):
            raise InputError(f"protocol must be qgv, qpt or both, got {self.protocol!r}")


def load_config(path, overrides: argparse.Namespace | None = None) -> CampaignConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    gate_obj = raw.get("gate")
    if isinstance(gate_obj, str):
        gpath = (path.parent / gate_obj) if not Path(gate_obj).is_absolute() else Path(gate_obj)
        try:
            gate_obj = json.loads(gpath.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read gate file {gpath}: {exc}") from exc
    if not isinstance(gate_obj, dict):
        raise InputError("config needs a 'gate' (file path or inline spec)")
    try:
        gate, noise = qio.parse_gate_spec(gate_obj)
        if "noise" in raw:
            noise = qio.parse_noise(raw["noise"], gate.n_qubits)
    except (qio.FormatError, ValueError) as exc:
        raise InputError(str(exc)) from exc
    n_grid = [int(n) for n in raw.get("n_grid", [])]
    cfg = dict(
        gate=gate,
        noise=noise,
        protocol=raw.get("protocol", "both"),
        n_grid=n_grid,
        qpt_n_grid=[int(n) for n in raw.get("qpt_n_grid", n_grid)],
        repetitions=int(raw.get("repetitions", 50)),
        qpt_repetitions=int(raw.get("qpt_repetitions", 15)),
        delta=float(raw.get("delta", 0.01)),
        seed=int(raw.get("seed", 0)),
        fit_range=tuple(raw.get("fit_range", (0, 500))),
        threshold=raw.get("threshold"),
        out=Path(raw.get("out", "out")),
    )
    if overrides is not None:
        for key in ("seed", "delta", "out"):
            v = getattr(overrides, key, None)
            if v is not None:
                cfg[key] = Path(v) if key == "out" else v
    return CampaignConfig(**cfg)


def strategy_for(gate: UnitaryGate):
    if gate.n_qubits == 1:
        return single_qubit_strategy(gate)
    if gate.n_qubits == 2:
        return cnot_strategy(gate)
    raise InputError("strategies exist for 1-qubit gates and for CNOT-type 2-qubit gates only")


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# -- commands -----------------------------------------------------------------------


def cmd_strategy(args) -> int:
    try:
        gate, _ = qio.load_gate_file(args.gate_file)
        strat = strategy_for(gate)
    except (OSError, json.JSONDecodeError, qio.FormatError, ValueError) as exc:
        raise InputError(str(exc)) from exc
    dump = strategy_to_dict(strat)
    probes, bases = tomography_grid(gate.n_qubits)
    dump["qpt_settings"] = len(probes) * len(bases)
    _emit(qio.dumps(dump), args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = load_config(args.config, args)
    strat = strategy_for(cfg.gate)
    device = device_channel(cfg.gate, cfg.noise)
    n = args.n if args.n is not None else cfg.n_grid[-1]
    gi = cfg.n_grid.index(n) if n in cfg.n_grid else 0
    gen = RngSpec(cfg.seed).generator(args.repetition, gi)
    records = run_qgv(strat, device, n, gen)
    _emit(qio.records_to_jsonl(records), args.records)
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.records:
        try:
            records = qio.read_records(args.records)
        except (OSError, qio.FormatError) as exc:
            raise InputError(str(exc)) from exc
        if not records:
            raise InputError("records file is empty")
        n = len(records)
        m = sum(r.passed for r in records)
    elif args.config:
        cfg = load_config(args.config, args)
        strat = strategy_for(cfg.gate)
        n = args.n if args.n is not None else cfg.n_grid[-1]
        gi = cfg.n_grid.index(n) if n in cfg.n_grid else 0
        records = run_qgv(strat, device_channel(cfg.gate, cfg.noise), n, RngSpec(cfg.seed).generator(0, gi))
        m = sum(r.passed for r in records)
        if args.nu is None:
            args.nu = strat.nu
        if args.delta is None:
            args.delta = cfg.delta
    else:
        raise InputError("verify needs --records or --config")
    nu = args.nu
    if nu is None and args.gate:
        try:
            gate, _ = qio.load_gate_file(args.gate)
        except (OSError, json.JSONDecodeError, ValueError) as exc:
            raise InputError(str(exc)) from exc
        nu = strategy_for(gate).nu
    if nu is None or nu <= 0:
        raise InputError("a positive --nu (or --gate) is required")
    delta = args.delta if args.delta is not None else 0.01
    out = {"N": n, "M": m, "delta": delta, "nu": nu}
    try:
        res = certify(m, n, delta, nu)
    except NotCertifiable as exc:
        out.update(epsilon=None, certified=False, reason=str(exc))
        _emit(qio.dumps(out), args.out)
        return EXIT_NOT_CERTIFIABLE
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    out.update(epsilon=res.epsilon, fidelity_lower_bound=res.fidelity_lower_bound, certified=True)
    _emit(qio.dumps(out), args.out)
    return EXIT_OK


def run_scaling(cfg: CampaignConfig) -> dict:
    """Run the configured campaigns and write CSV/JSON products into cfg.out."""
    cfg.out.mkdir(parents=True, exist_ok=True)
    device = device_channel(cfg.gate, cfg.noise)
    rng = RngSpec(cfg.seed)
    summary = {
        "gate": cfg.gate.name,
        "n_qubits": cfg.gate.n_qubits,
        "noise": qio.noise_to_json(cfg.noise),
        "true_entanglement_fidelity": entanglement_fidelity(device, cfg.gate),
        "delta": cfg.delta,
        "seed": cfg.seed,
    }
    if cfg.protocol in ("qgv", "both"):
        strat = strategy_for(cfg.gate)
        camp = campaign(strat, device, cfg.n_grid, cfg.repetitions, cfg.delta, rng)
        rows = camp.rows()
        (cfg.out / "qgv_curve.csv").write_text(qio.rows_to_csv(rows, ["N", "mean_epsilon", "sd_epsilon"]))
        res_rows = [
            {"N": p.n, "M": p.n_passed, "delta": cfg.delta, "nu": strat.nu, "epsilon": p.epsilon, "repetition": p.repetition}
            for p in camp.points
        ]
        (cfg.out / "qgv_results.csv").write_text(qio.rows_to_csv(res_rows, ["N", "M", "delta", "nu", "epsilon", "repetition"]))
        fit = _fit_report([(r["N"], r["mean_epsilon"]) for r in rows], cfg.fit_range)
        (cfg.out / "qgv_fit.json").write_text(qio.dumps(fit))
        summary["qgv"] = {"nu": strat.nu, "n_settings": strat.n_settings, "fit": fit}
        if cfg.threshold is not None:
            summary["qgv"]["required_N"] = next((r["N"] for r in rows if r["mean_epsilon"] <= cfg.threshold), None)
    if cfg.protocol in ("qpt", "both"):
        curve = qpt_epsilon_curve(device, cfg.gate, cfg.qpt_n_grid, cfg.qpt_repetitions, cfg.delta, rng)
        rows = [{"N": p.n_total_samples, "mean_infidelity": p.mean_infidelity, "upper_99": p.infidelity_upper_99} for p in curve]
        (cfg.out / "qpt_curve.csv").write_text(qio.rows_to_csv(rows, ["N", "mean_infidelity", "upper_99"]))
        fit = _fit_report([(r["N"], r["upper_99"]) for r in rows], cfg.fit_range)
        (cfg.out / "qpt_fit.json").write_text(qio.dumps(fit))
        probes, bases = tomography_grid(cfg.gate.n_qubits)
        summary["qpt"] = {"n_settings": len(probes) * len(bases), "fit": fit}
        if cfg.threshold is not None:
            summary["qpt"]["required_N"] = required_samples(curve, cfg.threshold)
    (cfg.out / "summary.json").write_text(qio.dumps(summary))
    return summary


def _fit_report(points, fit_range) -> dict:
    try:
        return loglog_fit(points, tuple(fit_range)).as_dict()
    except ValueError as exc:
        return {"slope": None, "stderr": None, "range": list(fit_range), "n_points": 0, "error": str(exc)}


def cmd_scaling(args) -> int:
    cfg = load_config(args.config, args)
    if cfg.protocol == "qgv" and not cfg.n_grid:
        raise InputError("n_grid is empty")
    summary = run_scaling(cfg)
    sys.stdout.write(qio.dumps(summary))
    return EXIT_OK


def cmd_qpt(args) -> int:
    try:
        table = qio.counts_from_csv(Path(args.counts).read_text())
    except (OSError, qio.FormatError) as exc:
        raise InputError(str(exc)) from exc
    res = mle_reconstruct(table, MleOptions())
    extra = {"log_likelihood": res.log_likelihood, "tp_residual": res.tp_residual, "converged": res.converged}
    if args.gate:
        gate, _ = qio.load_gate_file(args.gate)
        f = process_fidelity(channel_to_chi(unitary_channel(gate)), res.chi)
        extra["entanglement_fidelity"] = f
        extra["average_gate_fidelity"] = (gate.dim * f + 1) / (gate.dim + 1)
    _emit(qio.dumps(qio.chi_to_json(res.chi, **extra)), args.out)
    return EXIT_OK


def cmd_counts(args) -> int:
    from .simulate import allocate_shots, run_qpt_counts

    cfg = load_config(args.config, args)
    probes, bases = tomography_grid(cfg.gate.n_qubits)
    shots = allocate_shots(args.shots, len(probes) * len(bases))
    table = run_qpt_counts(device_channel(cfg.gate, cfg.noise), probes, bases, shots, RngSpec(cfg.seed).generator(0, 0, 1))
    _emit(qio.counts_to_csv(table), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qgv", description="Quantum gate verification and QPT baseline.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("strategy", help="dump the verification strategy of a gate")
    s.add_argument("gate_file")
    s.add_argument("--out")
    s.set_defaults(func=cmd_strategy)

    s = sub.add_parser("simulate", help="write one seeded QGV run as JSONL outcome records")
    s.add_argument("config")
    s.add_argument("--n", type=int)
    s.add_argument("--repetition", type=int, default=0)
    s.add_argument("--seed", type=int)
    s.add_argument("--records", help="output JSONL path (default stdout)")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("verify", help="certify an infidelity bound from outcome records")
    s.add_argument("--records")
    s.add_argument("--config")
    s.add_argument("--gate", help="gate file used to compute nu")
    s.add_argument("--n", type=int)
    s.add_argument("--delta", type=float)
    s.add_argument("--nu", type=float)
    s.add_argument("--seed", type=int)
    s.add_argument("--out")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("scaling", help="QGV and QPT infidelity-vs-N curves with log-log fits")
    s.add_argument("config")
    s.add_argument("--seed", type=int)
    s.add_argument("--delta", type=float)
    s.add_argument("--out")
    s.set_defaults(func=cmd_scaling)

    s = sub.add_parser("qpt", help="maximum-likelihood chi matrix from a count CSV")
    s.add_argument("counts")
    s.add_argument("--gate")
    s.add_argument("--out")
    s.set_defaults(func=cmd_qpt)

    s = sub.add_parser("counts", help="simulate a QPT count table CSV")
    s.add_argument("config")
    s.add_argument("--shots", type=int, required=True)
    s.add_argument("--seed", type=int)
    s.add_argument("--out")
    s.set_defaults(func=cmd_counts)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, qio.FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
