"""Certified infidelity of a noisy CNOT with the 16-setting strategy.

Prints mean and sd of the certified infidelity per N next to the true
infidelity of the device, plus the expected large-N floor f/nu where f is the
per-trial failure probability.
"""
import argparse
from pathlib import Path

from qgv.channels import device_channel, entanglement_fidelity
from qgv.cli import load_config
from qgv.simulate import RngSpec, campaign
from qgv.verification import cnot_strategy, pass_probability

HERE = Path(__file__).resolve().parent


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", type=Path, default=HERE / "configs" / "cnot_f087.json")
    ap.add_argument("--seed", type=int)
    args = ap.parse_args()

    cfg = load_config(args.config)
    strat = cnot_strategy(cfg.gate)
    dev = device_channel(cfg.gate, cfg.noise)
    f_e = entanglement_fidelity(dev, cfg.gate)
    fail = 1 - pass_probability(strat, dev)
    seed = cfg.seed if args.seed is None else args.seed
    summary = campaign(strat, dev, cfg.n_grid, cfg.repetitions, cfg.delta, RngSpec(seed))

    print(f"nu={strat.nu:.4f}  true infidelity={1 - f_e:.4f}  failure rate={fail:.4f}  floor f/nu={fail / strat.nu:.4f}")
    print(f"{'N':>7} {'mean eps':>9} {'sd':>8}")
    for row in summary.rows():
        print(f"{row['N']:>7} {row['mean_epsilon']:>9.4f} {row['sd_epsilon']:>8.4f}")


if __name__ == "__main__":
    main()
