"""Underactuated heavy top driven through its two rotors.

Solves the upright equilibrium and a tilted spinning boundary for several
horizons, reporting constraint satisfaction and the advected-direction check.
"""
import argparse

import numpy as np

from discmech import optimal_control as oc


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--N", type=int, nargs="+", default=[9, 12, 16])
    ap.add_argument("--tilt", type=float, default=0.3)
    args = ap.parse_args()

    p = oc.HeavyTopParams()
    print(f"{'case':>12} {'N':>3} {'iters':>5} {'action':>12} {'max|Phi|':>10} "
          f"{'Gamma':>10} {'max|lam|':>10}")
    for N in args.N:
        for case, boundary in (("equilibrium", oc.heavytop_equilibrium(N, p)),
                               ("perturbed", oc.heavytop_perturbed(N, p, tilt=args.tilt))):
            traj = oc.heavytop_oc_solve(boundary, p)
            lam = np.abs(traj.multipliers).max()
            print(f"{case:>12} {N:3d} {traj.info.iterations:5d} {traj.info.action:12.5e} "
                  f"{traj.info.constraint_max:10.2e} "
                  f"{oc.gamma_propagation_defect(traj, p):10.2e} {lam:10.3e}")


if __name__ == "__main__":
    main()
