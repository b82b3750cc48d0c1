"""Exercise the numeric verification layer end to end.

Runs every strong-Lyapunov pairing, the contraction-factor bound tables for
each accelerated step rule, and the continuous decay checks, printing one
line per check.  Exits nonzero if anything fails.

Usage: python scripts/verify_certificates.py [--samples 10000] [--kmax 1000]
"""

import argparse
import sys

import numpy as np

from lyapopt import flows, lyapunov, schedules
from lyapopt.problems import make_quadratic


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--samples", type=int, default=10_000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--kmax", type=int, default=1000)
    args = parser.parse_args()
    failed = False

    for name in lyapunov.PAIRING_NAMES:
        rep = lyapunov.verify_pairing(name, args.samples, args.seed)
        print(f"pairing {name:17s} min slack {rep['min_slack']: .3e}  "
              f"{'PASS' if rep['pass'] else 'FAIL'}")
        failed |= not rep["pass"]

    for rule in ("nag", "apg", "new_apg", "fast_grad"):
        for r in (0.25, 1.0, 4.0):
            for q in (0.0, 1e-3):
                _, _, rhos = schedules.iterate_schedule(rule, r, q, 1.0, args.kmax)
                rate_rule = {"apg": "b0", "new_apg": "b_half"}.get(rule, rule)
                worst = max(rhos[k] - schedules.rho_bound(rate_rule, r, q, 1.0, k)
                            for k in range(args.kmax + 1))
                ok = worst <= 1e-12
                print(f"rate {rule:10s} r={r:<5g} mu/L={q:<6g} "
                      f"max excess {worst: .3e}  {'PASS' if ok else 'FAIL'}")
                failed |= not ok

    quad = make_quadratic([1.0, 4.0], [1.0, -2.0])
    checks = [
        ("scaled_gradient", lyapunov.pairing_scaled(quad),
         flows.FlowState(0.0, np.array([4.0, -3.0]), gamma=quad.lip), 10.0),
        ("heavy_ball", lyapunov.pairing_hb(quad),
         flows.FlowState(0.0, np.array([4.0, -3.0]), v=np.zeros(2)), 10.0),
        ("avd_r3", lyapunov.pairing_avd(quad),
         flows.FlowState(1.0, np.array([4.0, -3.0]), v=np.zeros(2), gamma=4.0),
         50.0),
        ("hnag", lyapunov.pairing_hnag(quad),
         flows.FlowState(0.0, np.array([4.0, -3.0]), v=np.zeros(2),
                         gamma=quad.lip), 10.0),
    ]
    for name, (model, lyap), state0, t_end in checks:
        rep = flows.continuous_decay_check(model, lyap, state0, t_end, 1e-3)
        print(f"flow {name:16s} max rel excess {rep['max_rel_excess']: .3e}  "
              f"{'PASS' if rep['pass'] else 'FAIL'}")
        failed |= not rep["pass"]

    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
