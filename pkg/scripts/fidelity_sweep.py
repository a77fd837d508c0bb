"""Sample number needed by QGV to certify a target infidelity, as a function of F_e.

For a single-qubit gate the pass probability of the six-setting strategy is
1 - (2/3)(1 - F_e) for every channel, so the requirement depends on F_e alone.
The table lists the expected-count requirement (M = round(N p)) and the
seeded campaign requirement (mean over repetitions).
"""
import argparse

import numpy as np

from qgv.certify import NotCertifiable, epsilon_at_confidence
from qgv.channels import calibrate_noise, device_channel
from qgv.gates import UA
from qgv.simulate import RngSpec, campaign
from qgv.verification import pass_probability, single_qubit_strategy


def expected_requirement(p_pass, nu, eps, delta, n_max=20_000):
    # linear scan: rounding M = N p makes the criterion non-monotone in N
    for n in range(1, n_max):
        try:
            if epsilon_at_confidence(round(n * p_pass), n, delta, nu) <= eps:
                return n
        except NotCertifiable:
            pass
    return None


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--fidelities", type=float, nargs="+", default=[0.98, 0.99, 0.995, 0.996, 0.997, 0.999, 1.0])
    ap.add_argument("--eps", type=float, default=0.03)
    ap.add_argument("--delta", type=float, default=0.01)
    ap.add_argument("--repetitions", type=int, default=50)
    ap.add_argument("--seed", type=int, default=20240611)
    args = ap.parse_args()

    strat = single_qubit_strategy(UA)
    grid = list(range(20, 1000, 10)) + list(range(1000, 8001, 50))
    print(f"{'F_e':>6} {'pass prob':>9} {'N expected':>10} {'N campaign':>10}")
    for f in args.fidelities:
        dev = device_channel(UA, calibrate_noise(f) if f < 1 else None)
        p = pass_probability(strat, dev)
        n_exp = expected_requirement(p, strat.nu, args.eps, args.delta)
        rows = campaign(strat, dev, grid, args.repetitions, args.delta, RngSpec(args.seed)).rows()
        n_camp = next((r["N"] for r in rows if r["mean_epsilon"] <= args.eps), None)
        print(f"{f:>6.3f} {p:>9.5f} {str(n_exp):>10} {str(n_camp):>10}")
    print(f"single-qubit nu={strat.nu:.4f}, zero-failure minimum {int(np.ceil(np.log(1 / args.delta) / (args.eps * strat.nu)))}")


if __name__ == "__main__":
    main()
