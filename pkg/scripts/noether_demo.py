"""Conserved quantities of second-order Lagrangians on the plane.

Shoots on-shell trajectories and prints the drift of the rotation and
translation momenta, for the free spline and for a quartic potential that
keeps rotations but breaks translations.
"""
import argparse

import numpy as np

from discmech import models, verify


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--steps", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    start = verify.cubic_nodes([rng.normal(size=2), 0.1 * rng.normal(size=2),
                                1e-3 * rng.normal(size=2), 1e-5 * rng.normal(size=2)], 4)
    gens = {"rotation": verify.rotation_generator,
            "translation x": verify.translation_generator([1.0, 0.0]),
            "translation y": verify.translation_generator([0.0, 1.0])}
    # the quartic case blows up on long shots, so it gets a short horizon
    cases = (("spline", models.spline(2), args.steps),
             ("quartic", models.anharmonic_spline(2, k=1.0), 10))
    for label, L, steps in cases:
        traj = verify.on_shell_trajectory(L, start, steps)
        print(f"{label} ({steps} arrows)")
        for name, xi in gens.items():
            F = verify.noether_quantities(L, verify.NoetherData(xi), traj)
            drift = verify.noether_defect(L, verify.NoetherData(xi), traj)
            print(f"  {name:14s} first {F[0]: .6e}  drift {drift:.2e}")


if __name__ == "__main__":
    main()
