"""Rest-to-rest attitude manoeuvre of a controlled rigid body.

Solves the optimal-control boundary problem for a sweep of target rotations
and prints iterations, action and peak control per target.
"""
import argparse

import numpy as np

from discmech import liealg, optimal_control as oc


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--N", type=int, default=10, help="number of nodes")
    ap.add_argument("--hbar", type=float, default=0.1)
    ap.add_argument("--scales", type=float, nargs="+", default=[0.25, 0.5, 1.0, 2.0])
    args = ap.parse_args()

    p = oc.RigidBodyParams((1.0, 2.0, 3.0), args.hbar)
    axis = np.array([0.2, -0.1, 0.15])
    print(f"{'scale':>6} {'iters':>5} {'action':>12} {'max|u|':>10} {'residual':>10}")
    for s in args.scales:
        RT = liealg.cay(s * axis)
        traj = oc.rigidbody_oc_solve(np.eye(3), np.zeros(3), RT, np.zeros(3), args.N, p)
        u = np.asarray(oc.rigidbody_controls(traj, p))
        print(f"{s:6.2f} {traj.info.iterations:5d} {traj.info.action:12.5e} "
              f"{np.abs(u).max():10.4f} {traj.info.residual:10.2e}")


if __name__ == "__main__":
    main()
