"""Convergence of the Cayley Euler-Poincare scheme for the free rigid body
against a high-accuracy ODE reference."""
import argparse

from discmech import verify


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--inertia", type=float, nargs=3, default=[1.0, 2.0, 3.0])
    ap.add_argument("--eta0", type=float, nargs=3, default=[1.0, 0.5, 0.2])
    ap.add_argument("--T", type=float, default=1.0)
    ap.add_argument("--levels", type=int, default=5)
    args = ap.parse_args()

    hbars = [0.1 / 2 ** k for k in range(args.levels)]
    tab = verify.ep_order_check(args.inertia, args.eta0, hbars, args.T)
    print(f"{'hbar':>8} {'error':>10} {'ratio':>7} {'order':>6}")
    for i, (h, e) in enumerate(zip(tab.hbars, tab.errors)):
        extra = f"{tab.ratios[i - 1]:7.3f} {tab.orders[i - 1]:6.3f}" if i else ""
        print(f"{h:8.5f} {e:10.3e} {extra}")


if __name__ == "__main__":
    main()
