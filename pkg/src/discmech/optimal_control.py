"""Discrete optimal control as second-order variational problems.

Generic path: a first-order discrete Lagrangian ``Ld1`` and a cost ``C_d``
give ``L_d(g, h) = C_d(g, u(g, h))`` where ``u`` is the DEL defect of ``Ld1``
read as an applied force. Worked instances: a fully actuated rigid body on
SO(3) and a heavy top with two internal rotors (action groupoid over
``(Gamma, theta)`` with group SO(3) x T^2).
"""

import threading
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import liealg
from .discrete1 import DiscreteLagrangian1, Momentum, del_residual
from .errors import InvalidSplit
from .groupoid import ActionBackend, GroupoidElement, SO3Backend
from .newton import SolverConfig, newton
from .second_order import (BvpProblem, ConstraintSet, DiscreteLagrangian2, Trajectory,
                           solve_bvp)


# -- generic construction ---------------------------------------------------

def control_from_step(Ld1: DiscreteLagrangian1, g_k, g_k1) -> Momentum:
    return Momentum(del_residual(Ld1, g_k, g_k1), np.array(g_k.target))


def quadratic_cost(g, u):
    u = u.components if isinstance(u, Momentum) else np.asarray(u)
    return 0.5 * float(u @ u)


def oc_lagrangian(Ld1: DiscreteLagrangian1, Cd: Callable = quadratic_cost) -> DiscreteLagrangian2:
    return DiscreteLagrangian2(lambda g, h: Cd(g, control_from_step(Ld1, g, h)), Ld1.backend)


@dataclass(frozen=True)
class ControlledSystem:
    """Controlled discrete equations ``defects(g, h) = u`` split into actuated
    components (the controls) and unactuated ones (forced to vanish)."""

    defects: Callable[[GroupoidElement, GroupoidElement], np.ndarray]
    backend: object
    n: int
    actuated: Sequence[int]
    unactuated: Sequence[int] = ()
    cost: Callable[[np.ndarray], float] = lambda u: 0.5 * (u @ u)
    complex_step: bool = False  # defects are analytic in the payload entries


def _last_call_cache(fn):
    """Reuse the previous result when called again on the very same objects;
    the Lagrangian and every constraint evaluate ``fn`` on identical pairs."""
    local = threading.local()

    def wrapped(g, h):
        last = getattr(local, "last", None)
        if last is not None and last[0] is g and last[1] is h:
            return last[2]
        val = np.asarray(fn(g, h))
        local.last = (g, h, val)
        return val

    return wrapped


def underactuated_to_constrained(cs: ControlledSystem):
    """Return ``(L2, constraints)``; ``constraints`` is None when fully actuated."""
    act, una = list(cs.actuated), list(cs.unactuated)
    both = act + una
    if len(set(act) & set(una)):
        raise InvalidSplit(f"indices {sorted(set(act) & set(una))} are both actuated and unactuated")
    if len(set(both)) != len(both):
        raise InvalidSplit("repeated index in split")
    if sorted(both) != list(range(cs.n)):
        raise InvalidSplit(f"split must cover exactly the indices 0..{cs.n - 1}")
    if not act:
        raise InvalidSplit("at least one component must be actuated")
    ia, iu = np.array(act), np.array(una, dtype=int)
    defects = _last_call_cache(cs.defects)
    L2 = DiscreteLagrangian2(lambda g, h: cs.cost(defects(g, h)[ia]), cs.backend,
                             complex_step=cs.complex_step)
    if not una:
        return L2, None
    phis = [(lambda A: (lambda g, h: defects(g, h)[A]))(A) for A in iu]
    return L2, ConstraintSet(phis, complex_step=cs.complex_step)


# -- rigid body ---------------------------------------------------------------

@dataclass(frozen=True)
class RigidBodyParams:
    inertia: tuple = (1.0, 2.0, 3.0)
    hbar: float = 0.1

    def __post_init__(self):
        I = np.asarray(self.inertia, dtype=float)
        if I.shape != (3,) or np.any(I <= 0):
            raise ValueError("inertia must be three positive numbers")
        if len(set(I.tolist())) != 3:
            raise ValueError("inertia entries must be pairwise distinct")
        if not self.hbar > 0:
            raise ValueError("time step must be positive")

    @property
    def P(self):
        I1, I2, I3 = self.inertia
        return np.array([I1 / (I2 - I3), I2 / (I3 - I1), I3 / (I1 - I2)])


def rigidbody_ltilde(Omega, Omegadot, p: RigidBodyParams):
    O = np.asarray(Omega, dtype=float)
    Od = np.asarray(Omegadot, dtype=float)
    cross = np.array([O[1] * O[2], O[0] * O[2], O[0] * O[1]])
    v = Od - p.P * cross
    return 0.5 * float(v @ v)


def rigidbody_Ld2_xi(xi_k, xi_k1, p: RigidBodyParams):
    h = p.hbar
    xi_k, xi_k1 = np.asarray(xi_k, dtype=float), np.asarray(xi_k1, dtype=float)
    return h * rigidbody_ltilde(0.5 * (xi_k + xi_k1), (xi_k1 - xi_k) / h, p)


def rigidbody_Ld2(w_k, w_k1, p: RigidBodyParams):
    h = p.hbar
    a, b = liealg.cay_inv(w_k), liealg.cay_inv(w_k1)
    return h * rigidbody_ltilde((a + b) / (2 * h), (b - a) / h ** 2, p)


def rigidbody_lagrangian(p: RigidBodyParams) -> DiscreteLagrangian2:
    return DiscreteLagrangian2(lambda g, h: rigidbody_Ld2(g.payload[0], h.payload[0], p), SO3Backend())


def rigidbody_Ld1(p: RigidBodyParams) -> DiscreteLagrangian1:
    """Free rigid body ``h l(cay^-1(w)/h)`` with ``l = 0.5 xi^T I xi``."""
    I = np.asarray(p.inertia, dtype=float)
    h = p.hbar

    def fn(g):
        xi = liealg.cay_inv(g.payload[0]) / h
        return h * 0.5 * float(xi @ (I * xi))

    return DiscreteLagrangian1(fn, SO3Backend())


def rest_to_rest_guess(R0, Omega0, RT, OmegaT, N, p: RigidBodyParams) -> Trajectory:
    """Node guess with the boundary pairs built from the end velocities and
    interior nodes spread along a single Cayley arc."""
    if N < 5:
        raise ValueError("rigid-body problems need N >= 5 nodes")
    h = p.hbar
    R0 = liealg.check_rotation(R0)
    RT = liealg.check_rotation(RT)
    R1 = R0 @ liealg.cay(h * np.asarray(Omega0, dtype=float))
    Rm = RT @ liealg.cay(h * np.asarray(OmegaT, dtype=float)).T
    arc = liealg.cay_inv(R1.T @ Rm)
    mids = [R1 @ liealg.cay(s * arc) for s in np.linspace(0.0, 1.0, N - 2)[1:-1]]
    return Trajectory.from_rotations([R0, R1] + mids + [Rm, RT])


def rigidbody_oc_solve(R0, Omega0, RT, OmegaT, N, p: RigidBodyParams = RigidBodyParams(),
                       cfg: SolverConfig = SolverConfig(), guess: Optional[Trajectory] = None):
    guess = rest_to_rest_guess(R0, Omega0, RT, OmegaT, N, p) if guess is None else guess
    return solve_bvp(BvpProblem(rigidbody_lagrangian(p), guess, None, cfg))


def rigidbody_controls(traj: Trajectory, p: RigidBodyParams):
    """Applied torques recovered from consecutive arrows of a solution."""
    Ld1 = rigidbody_Ld1(p)
    els = traj.elements
    return np.array([control_from_step(Ld1, els[k], els[k + 1]).components
                     for k in range(len(els) - 1)])


# -- heavy top with two rotors ----------------------------------------------

@dataclass(frozen=True)
class HeavyTopParams:
    Ibar: tuple = (1.0, 1.2, 0.8)
    J: tuple = (0.1, 0.1)
    Mgh: float = 1.0
    hbar: float = 0.1

    def __post_init__(self):
        if np.any(np.asarray(self.Ibar) <= 0) or np.any(np.asarray(self.J) <= 0):
            raise ValueError("inertias must be positive")
        if not self.hbar > 0:
            raise ValueError("time step must be positive")

    @property
    def gamma(self):
        return (self.Ibar[0] + self.J[0], self.Ibar[1] + self.J[1])

    def mass_matrix(self):
        g1, g2 = self.gamma
        J1, J2 = self.J
        return np.array([[g1, 0, 0, J1, 0],
                         [0, g2, 0, 0, J2],
                         [0, 0, self.Ibar[2], 0, 0],
                         [J1, 0, 0, J1, 0],
                         [0, J2, 0, 0, J2]], dtype=float)


def heavytop_reduced_l(Gamma, Omega, thetadot, p: HeavyTopParams):
    z = np.concatenate([np.asarray(Omega, dtype=float), np.asarray(thetadot, dtype=float)])
    return 0.5 * float(z @ p.mass_matrix() @ z) - p.Mgh * float(np.asarray(Gamma)[2])


def heavytop_continuous_constraints(Gamma, Omega, Omegadot, thetadot, thetaddot, p: HeavyTopParams):
    G, O, Od = (np.asarray(v, dtype=float) for v in (Gamma, Omega, Omegadot))
    td, tdd = np.asarray(thetadot, dtype=float), np.asarray(thetaddot, dtype=float)
    g1, g2 = p.gamma
    J1, J2 = p.J
    I3 = p.Ibar[2]
    return np.array([
        g1 * Od[0] + J1 * tdd[0] - g2 * O[1] * O[2] + Od[2] * I3 * O[1] - p.Mgh * G[1],
        g2 * Od[1] + J2 * tdd[1] + g1 * O[0] * O[2] - J1 * td[0] * O[2] + p.Mgh * G[0],
        I3 * Od[2] - g1 * O[0] * O[1] - J1 * td[0] * O[1] + g2 * O[1] * O[0] + J2 * td[1] * O[0],
    ])


def heavytop_controls(xi_k, xi_k1, th_k, th_k1, th_k2, p: HeavyTopParams):
    """Rotor torques ``J_i (Omega_dot_i + theta_ddot_i)`` on the stencils."""
    h = p.hbar
    xi_k, xi_k1 = np.asarray(xi_k), np.asarray(xi_k1)
    tdd = (np.asarray(th_k2) - 2 * np.asarray(th_k1) + np.asarray(th_k)) / h ** 2
    return np.asarray(p.J) * ((xi_k1 - xi_k)[:2] / h + tdd)


def heavytop_discrete(xi_k, xi_k1, th_k, th_k1, th_k2, Gamma_k, p: HeavyTopParams):
    """Return ``(L_d, Phi1, Phi2, Phi3)`` for one composable pair.

    Arithmetic only, so complex arguments propagate (complex-step derivatives).
    """
    h = p.hbar
    a, b = np.asarray(xi_k) * 1.0, np.asarray(xi_k1) * 1.0
    t0, t1, t2 = (np.asarray(v) * 1.0 for v in (th_k, th_k1, th_k2))
    G = np.asarray(Gamma_k) * 1.0
    g1, g2 = p.gamma
    J1, J2 = p.J
    I3 = p.Ibar[2]
    s = a + b
    dxi = (b - a) / h
    tdd = (t2 - 2 * t1 + t0) / h ** 2
    tsp = t2 - t0
    u = heavytop_controls(a, b, t0, t1, t2, p)
    L = 0.5 * (u @ u)
    phi1 = (g1 * dxi[0] + J1 * tdd[0] - p.Mgh * G[1]
            - g2 * s[1] * s[2] / 4 + I3 * (b[2] - a[2]) * s[1] / (2 * h))
    phi2 = (g2 * dxi[1] + J2 * tdd[1] + g1 * s[0] * s[2] / 4
            - J1 * tsp[0] * s[2] / (4 * h) + p.Mgh * G[0])
    phi3 = (I3 * dxi[2] - g1 * s[0] * s[1] / 4 + g2 * s[1] * s[0] / 4
            + J2 * tsp[1] * s[0] / (4 * h) - J1 * tsp[0] * s[1] / (4 * h))
    return L, phi1, phi2, phi3


HEAVY_TOP_BACKEND = ActionBackend(rotation=True, torus=2)


def heavytop_arrow(Gamma, theta, xi, theta_next, p: HeavyTopParams):
    q = np.concatenate([np.asarray(Gamma, dtype=float), np.asarray(theta, dtype=float)])
    a = np.asarray(theta_next, dtype=float) - np.asarray(theta, dtype=float)
    return HEAVY_TOP_BACKEND.element(q, liealg.cay(p.hbar * np.asarray(xi, dtype=float)), a)


def heavytop_unpack(g, h, p: HeavyTopParams):
    """Arguments of :func:`heavytop_discrete` read off a composable pair."""
    q, R, _ = g.payload
    xi_k = liealg.cay_inv(R) / p.hbar
    xi_k1 = liealg.cay_inv(h.payload[1]) / p.hbar
    return xi_k, xi_k1, q[3:], g.target[3:], h.target[3:], q[:3]


def heavytop_system(p: HeavyTopParams) -> ControlledSystem:
    """Controlled equations as defects ``(Phi1, Phi2, Phi3, u1, u2)``; the
    rotor torques are actuated, the body equations are not."""

    def defects(g, h):
        args = heavytop_unpack(g, h, p)
        _, f1, f2, f3 = heavytop_discrete(*args, p)
        u = heavytop_controls(*args[:5], p)
        return np.array([f1, f2, f3, u[0], u[1]])

    return ControlledSystem(defects, HEAVY_TOP_BACKEND, 5, actuated=(3, 4), unactuated=(0, 1, 2),
                            complex_step=True)


def heavytop_problem(p: HeavyTopParams):
    return underactuated_to_constrained(heavytop_system(p))


def heavytop_simulate(Gamma0, xi0, thetas, p: HeavyTopParams,
                      cfg: SolverConfig = SolverConfig()) -> Trajectory:
    """Forward solve of the constrained dynamics for prescribed rotor angles.

    ``thetas`` holds the angles at all ``N`` nodes; each step solves
    ``Phi(xi_k, xi_{k+1}, ...) = 0`` for ``xi_{k+1}``. The result satisfies
    every constraint and serves as a feasible boundary and guess.
    """
    thetas = np.asarray(thetas, dtype=float)
    els = [heavytop_arrow(Gamma0, thetas[0], xi0, thetas[1], p)]
    xi = np.asarray(xi0, dtype=float)
    for k in range(1, len(thetas) - 1):
        g = els[-1]
        G, th_prev = g.source[:3], g.source[3:]
        Gn = g.target[:3]

        def res(x):
            return np.array(heavytop_discrete(xi, x, th_prev, thetas[k], thetas[k + 1], G, p)[1:])

        xi = newton(res, lambda x, dz: x + dz, xi.copy(), 3, cfg).state
        els.append(heavytop_arrow(Gn, thetas[k], xi, thetas[k + 1], p))
    return Trajectory(els)


def heavytop_equilibrium(N, p: HeavyTopParams = HeavyTopParams()) -> Trajectory:
    """Upright top at rest with fixed rotors."""
    return heavytop_simulate([0.0, 0.0, 1.0], np.zeros(3), np.zeros((N, 2)), p)


def heavytop_perturbed(N, p: HeavyTopParams = HeavyTopParams(), tilt=0.3, spin=1.0,
                       rotor=0.5) -> Trajectory:
    """Tilted spinning top driven by a smooth rotor motion."""
    G0 = np.array([tilt, 0.0, 1.0])
    G0 /= np.linalg.norm(G0)
    t = np.arange(N) / (N - 1)
    thetas = rotor * np.column_stack([np.sin(np.pi * t) ** 2, t ** 2 * (1 - t)])
    return heavytop_simulate(G0, np.array([0.0, 0.0, spin]), thetas, p)


def heavytop_oc_solve(boundary: Trajectory, p: HeavyTopParams = HeavyTopParams(),
                      cfg: SolverConfig = SolverConfig()) -> Trajectory:
    """Solve with the first and last arrows (and total product) of ``boundary``
    held fixed, using ``boundary`` itself as the initial guess."""
    if boundary.N < 7:
        raise ValueError("heavy-top problems need N >= 7 nodes")
    L2, C = heavytop_problem(p)
    return solve_bvp(BvpProblem(L2, boundary, C, cfg))


def gamma_propagation_defect(traj: Trajectory, p: HeavyTopParams):
    """Max deviation of ``Gamma_{k+1}`` from ``cay(h xi_k)^T Gamma_k``."""
    out = 0.0
    for g, h in zip(traj.elements[:-1], traj.elements[1:]):
        xi = liealg.cay_inv(g.payload[1]) / p.hbar
        pred = liealg.cay(p.hbar * xi).T @ g.source[:3]
        out = max(out, float(np.max(np.abs(h.source[:3] - pred))))
    return out
