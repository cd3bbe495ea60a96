"""Shipped example Lagrangians with analytic partial derivatives."""

from .discrete1 import DiscreteLagrangian1
from .second_order import DiscreteLagrangian2


def free_particle(m=1, hbar=1.0, mass=1.0):
    """``mass |q1 - q0|^2 / (2 h)`` on R^m x R^m."""
    def fn(q0, q1):
        d = q1 - q0
        return 0.5 * mass * float(d @ d) / hbar

    return DiscreteLagrangian1.from_pair(fn, m, d1=lambda q0, q1: -mass * (q1 - q0) / hbar,
                                         d2=lambda q0, q1: mass * (q1 - q0) / hbar)


def harmonic(m=1, hbar=0.1, omega=1.0):
    """Midpoint-potential oscillator ``h [|v|^2/2 - omega^2 |q_mid|^2/2]``."""
    w2 = omega ** 2

    def fn(q0, q1):
        v = (q1 - q0) / hbar
        mid = 0.5 * (q0 + q1)
        return hbar * (0.5 * float(v @ v) - 0.5 * w2 * float(mid @ mid))

    def d1(q0, q1):
        return -(q1 - q0) / hbar - 0.25 * hbar * w2 * (q0 + q1)

    def d2(q0, q1):
        return (q1 - q0) / hbar - 0.25 * hbar * w2 * (q0 + q1)

    return DiscreteLagrangian1.from_pair(fn, m, d1=d1, d2=d2)


def spline(m=1):
    """Squared second difference ``0.5 |q2 - 2 q1 + q0|^2``."""
    def fn(q0, q1, q2):
        a = q2 - 2 * q1 + q0
        return 0.5 * float(a @ a)

    def grad(q0, q1, q2):
        a = q2 - 2 * q1 + q0
        return a, -2 * a, a

    return DiscreteLagrangian2.from_triple(fn, m, grad)


def anharmonic_spline(m=1, k=0.5):
    """Spline energy plus a quartic potential on the middle node; not
    translation invariant, used as a generic test case."""
    def fn(q0, q1, q2):
        a = q2 - 2 * q1 + q0
        return 0.5 * float(a @ a) + 0.25 * k * float(q1 @ q1) ** 2

    def grad(q0, q1, q2):
        a = q2 - 2 * q1 + q0
        return a, -2 * a + k * float(q1 @ q1) * q1, a

    return DiscreteLagrangian2.from_triple(fn, m, grad)
