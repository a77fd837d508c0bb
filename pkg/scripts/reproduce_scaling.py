"""QGV vs QPT certified infidelity against sample number for U_a and U_b.

Runs both protocols for each gate behind a depolarizing channel of the given
entanglement fidelity, writes the CSV/JSON products of ``qgv scaling`` under
--out, and prints the fitted log-log slopes and the sample numbers needed to
reach the target infidelity.

    python scripts/reproduce_scaling.py                  # F_e = 0.98
    python scripts/reproduce_scaling.py --fidelity 0.996 --out out/f0996
"""
import argparse
import dataclasses
import json
from pathlib import Path

from qgv.cli import load_config, run_scaling
from qgv.channels import calibrate_noise

HERE = Path(__file__).resolve().parent


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--fidelity", type=float, default=0.98)
    ap.add_argument("--gates", nargs="+", default=["ua", "ub"])
    ap.add_argument("--seed", type=int)
    ap.add_argument("--protocol", choices=["qgv", "qpt", "both"], default="both")
    ap.add_argument("--out", type=Path, default=Path("out/scaling"))
    args = ap.parse_args()

    for name in args.gates:
        cfg = load_config(HERE / "configs" / f"{name}_f098.json")
        cfg = dataclasses.replace(
            cfg,
            noise=calibrate_noise(args.fidelity),
            protocol=args.protocol,
            seed=cfg.seed if args.seed is None else args.seed,
            out=args.out / name,
        )
        summary = run_scaling(cfg)
        print(f"== {name}  F_e={summary['true_entanglement_fidelity']:.4f}  -> {cfg.out}")
        for proto in ("qgv", "qpt"):
            if proto in summary:
                s = summary[proto]
                fit = s["fit"]
                print(
                    f"  {proto.upper()}: settings={s['n_settings']:>3}  slope={fit['slope']:.3f} +- {fit['stderr']:.3f}"
                    f"  N(eps<={cfg.threshold})={s.get('required_N')}"
                )
    print(json.dumps({"fidelity": args.fidelity, "out": str(args.out)}))


if __name__ == "__main__":
    main()
