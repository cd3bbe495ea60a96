"""Numerical checks of the structural properties of the discrete flows:
momentum matching, symplecticity, Noether conservation and the order of the
discrete Euler-Poincare scheme."""

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from . import liealg, models
from .constants import TOL
from .discrete1 import (DiscreteLagrangian1, Momentum, ep_flow, hamiltonian_step,
                        legendre_minus, legendre_plus, step)
from .errors import NotOnShell
from .groupoid import PairBackend, dirderiv_left, dirderiv_right
from .newton import SolverConfig
from .second_order import (DiscreteLagrangian2, Trajectory, _check_window, _partial,
                           action_sum, perturb_junction, shoot, so_residual)


# -- momentum matching --------------------------------------------------------

@dataclass(frozen=True)
class MomentumTriple:
    """Momenta of ``L2`` at a composable pair ``(g, h)``.

    ``mu`` is the right-trivialized derivative in ``g`` (source side),
    ``mu_tilde`` the derivative carried by the shared node: left-trivialized
    in ``g`` minus right-trivialized in ``h``. ``mu_bar`` is the
    left-trivialized derivative in ``h`` (target side).
    """

    mu: np.ndarray
    mu_tilde: np.ndarray
    mu_bar: np.ndarray


def momentum_triple(L2: DiscreteLagrangian2, g, h) -> MomentumTriple:
    f = L2.fn
    basis = g.backend.basis()
    real = lambda fn: (lambda x: float(np.real(fn(x))))
    mu = np.array([dirderiv_right(real(lambda a: f(a, h)), g, e) for e in basis])
    d1 = np.array([dirderiv_left(real(lambda a: f(a, h)), g, e) for e in basis])
    d2r = np.array([dirderiv_right(real(lambda b: f(g, b)), h, e) for e in basis])
    mu_bar = np.array([dirderiv_left(real(lambda b: f(g, b)), h, e) for e in basis])
    return MomentumTriple(mu, d1 - d2r, mu_bar)


def implicit_dynamics_residual(L2: DiscreteLagrangian2, w: Sequence):
    """Matching defect at the junction of ``w = (g1, g2, g3, g4)``: the
    target-side momentum of ``(g1, g2)`` and the shared-node momentum of
    ``(g2, g3)`` against the source-side momentum of ``(g3, g4)``."""
    _check_window(w)
    g1, g2, g3, g4 = w
    t12 = momentum_triple(L2, g1, g2)
    t23 = momentum_triple(L2, g2, g3)
    t34 = momentum_triple(L2, g3, g4)
    return t12.mu_bar + t23.mu_tilde - t34.mu


def momentum_matching_defects(Ld: DiscreteLagrangian1, arrows: Sequence):
    """``|F+(g_k) - F-(g_{k+1})|_inf`` along a first-order trajectory."""
    return np.array([np.max(np.abs(legendre_plus(Ld, g) - legendre_minus(Ld, h)))
                     for g, h in zip(arrows[:-1], arrows[1:])])


def first_order_trajectory(Ld: DiscreteLagrangian1, g0, steps: int,
                           cfg: SolverConfig = SolverConfig()):
    out = [g0]
    for _ in range(steps):
        out.append(step(Ld, out[-1], cfg=cfg))
    return out


# -- symplecticity ------------------------------------------------------------

SYMPLECTIC_CFG = SolverConfig(tol=1e-13, polish=3)


def _flow_map(Ld: DiscreteLagrangian1, cfg: SolverConfig):
    def phi(z):
        m = z.size // 2
        out = hamiltonian_step(Ld, Momentum(z[m:], z[:m]), cfg=cfg)
        return np.concatenate([out.base, out.components])
    return phi


def symplectic_jacobian(Ld: DiscreteLagrangian1, q, p, step: float = 1e-5,
                        cfg: SolverConfig = SYMPLECTIC_CFG):
    """Central-difference Jacobian of ``(q, p) -> hamiltonian_step``."""
    if not isinstance(Ld.backend, PairBackend):
        raise TypeError("symplecticity is checked on the pair groupoid only")
    z = np.concatenate([np.atleast_1d(q), np.atleast_1d(p)]).astype(float)
    phi = _flow_map(Ld, cfg)
    J = np.empty((z.size, z.size))
    for i in range(z.size):
        e = np.zeros_like(z)
        e[i] = step
        J[:, i] = (phi(z + e) - phi(z - e)) / (2 * step)
    return J


def canonical_form(m: int):
    return np.block([[np.zeros((m, m)), np.eye(m)], [-np.eye(m), np.zeros((m, m))]])


def symplectic_jacobian_defect(J):
    Om = canonical_form(J.shape[0] // 2)
    return float(np.linalg.norm(J.T @ Om @ J - Om))


def symplecticity_defect(Ld: DiscreteLagrangian1, q, p, step: float = 1e-5,
                         cfg: SolverConfig = SYMPLECTIC_CFG) -> float:
    """``|J^T Om J - Om|_F`` for the finite-difference Jacobian ``J``."""
    return symplectic_jacobian_defect(symplectic_jacobian(Ld, q, p, step, cfg))


# -- Noether ------------------------------------------------------------------

@dataclass(frozen=True)
class NoetherData:
    """Infinitesimal generator ``xi(q)`` on the base and optional gauge term
    ``gauge(q_a, q_b)`` (zero for strict invariance)."""

    generator: Callable[[np.ndarray], np.ndarray]
    gauge: Optional[Callable] = None


def rotation_generator(q):
    return np.array([-q[1], q[0]])


def translation_generator(direction):
    d = np.asarray(direction, dtype=float)
    return lambda q: d


def _triple_grad(L2: DiscreteLagrangian2):
    if L2.triple_grad is not None:
        return lambda *q: [np.asarray(v, dtype=float) for v in L2.triple_grad(*q)]
    f = lambda *q: float(np.real(L2.triple(*q)))
    return lambda *q: [_partial(f, list(q), k) for k in range(3)]


def noether_quantities(L2: DiscreteLagrangian2, nd: NoetherData, traj: Trajectory):
    """``F(k)`` for every run of five consecutive nodes starting at ``k``."""
    q = traj.nodes()
    grad = _triple_grad(L2)
    out = []
    for k in range(len(q) - 4):
        _, _, a3 = grad(q[k], q[k + 1], q[k + 2])
        _, b2, b3 = grad(q[k + 1], q[k + 2], q[k + 3])
        F = float((a3 + b2) @ nd.generator(q[k + 2]) + b3 @ nd.generator(q[k + 3]))
        if nd.gauge is not None:
            F -= float(nd.gauge(q[k + 2], q[k + 3]))
        out.append(F)
    return np.array(out)


def noether_defect(L2: DiscreteLagrangian2, nd: NoetherData, traj: Trajectory,
                   on_shell: float = TOL.on_shell) -> float:
    """Largest step-to-step change of the Noether quantity. Raises NotOnShell
    when ``traj`` does not solve the second-order equations."""
    if not isinstance(traj.backend, PairBackend):
        raise TypeError("Noether checks are implemented on the pair groupoid")
    els = traj.elements
    res = max((float(np.max(np.abs(so_residual(L2, els[j - 1:j + 3]))))
               for j in range(1, len(els) - 2)), default=0.0)
    if res > on_shell:
        raise NotOnShell(res)
    F = noether_quantities(L2, nd, traj)
    return float(np.max(np.abs(np.diff(F)))) if F.size > 1 else 0.0


def cubic_nodes(coeffs, count):
    """Nodes ``q_k = c0 + c1 k + c2 k^2 + c3 k^3`` for ``k < count``."""
    k = np.arange(count, dtype=float)[:, None]
    c = [np.asarray(v, dtype=float) for v in coeffs]
    return [row for row in c[0] + c[1] * k + c[2] * k ** 2 + c[3] * k ** 3]


def on_shell_trajectory(L2: DiscreteLagrangian2, start_nodes, steps: int,
                        cfg: SolverConfig = SolverConfig()) -> Trajectory:
    """Shoot from four initial nodes up to ``steps`` arrows."""
    start = Trajectory.from_nodes(start_nodes, L2.backend).elements
    if len(start) != 3:
        raise ValueError("shooting starts from exactly four nodes")
    return shoot(L2, start, steps - 3, cfg)


# -- second-order stationarity ----------------------------------------------

def stationarity_ratios(L2: DiscreteLagrangian2, traj: Trajectory, constraints=None,
                        eps=(1e-3, 1e-4), rng=None):
    """``dS(eps[0]) / dS(eps[1])`` for a random chart direction at every free
    junction, where ``dS`` is the change of the augmented action. At a
    stationary point the change is quadratic, so the ratio is close to
    ``(eps[0] / eps[1])**2``."""
    rng = np.random.default_rng(0) if rng is None else rng
    lam = traj.multipliers if constraints is not None else None
    S = lambda t: action_sum(L2, t, constraints, lam)
    S0 = S(traj)
    out = []
    for j in range(1, len(traj.elements) - 2):
        d = rng.standard_normal(traj.backend.rank)
        d /= np.linalg.norm(d)
        dS = [S(perturb_junction(traj, j, e * d)) - S0 for e in eps]
        out.append(dS[0] / dS[1])
    return np.array(out)


# -- discrete Euler-Poincare order --------------------------------------------

@dataclass
class OrderTable:
    hbars: np.ndarray
    errors: np.ndarray
    ratios: np.ndarray = field(default_factory=lambda: np.zeros(0))
    orders: np.ndarray = field(default_factory=lambda: np.zeros(0))


def free_body_reference(inertia, eta0, T):
    """Dense solution ``Omega(t)`` of ``dPi/dt = Omega x Pi``, ``Pi = I Omega``."""
    I = np.asarray(inertia, dtype=float)
    sol = solve_ivp(lambda t, P: np.cross(P / I, P), (0.0, T), I * np.asarray(eta0, dtype=float),
                    method="DOP853", rtol=1e-12, atol=1e-14, dense_output=True)
    return lambda t: (sol.sol(t).T / I).T


def ep_order_check(inertia, eta0, hbars, T: float = 1.0,
                   cfg: SolverConfig = SolverConfig(tol=1e-13)) -> OrderTable:
    """Step the Cayley discrete Euler-Poincare equations of the free rigid
    body and compare ``eta_k`` with the reference at ``(k + 1/2) h``.

    The discrete velocity lives on the half step, so the scheme starts from
    ``Omega_ref(h/2)``.
    """
    hbars = np.asarray(hbars, dtype=float)
    if np.any(np.diff(hbars) >= 0):
        raise ValueError("step sizes must be decreasing")
    I = np.asarray(inertia, dtype=float)
    ref = free_body_reference(I, eta0, T + hbars.max())
    l = lambda x: 0.5 * float(x @ (I * x))
    grad = lambda x: I * x
    errs = []
    for h in hbars:
        n = int(round(T / h))
        etas = ep_flow(l, grad, ref(0.5 * h), h, n, cfg)
        t = (np.arange(n + 1) + 0.5) * h
        errs.append(float(np.max(np.abs(etas - ref(t).T))))
    errs = np.array(errs)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = errs[:-1] / errs[1:]
        orders = np.log(ratios) / np.log(hbars[:-1] / hbars[1:])
    return OrderTable(hbars, errs, ratios, orders)


# -- suite ----------------------------------------------------------------------

@dataclass
class Check:
    name: str
    value: float
    threshold: float
    relation: str = "<="

    @property
    def passed(self):
        if self.relation == "<=":
            return bool(self.value <= self.threshold)
        return bool(self.value >= self.threshold)


SUITES = ("cayley", "symplectic", "noether", "order")


def cayley_checks(rng, samples: int = 1000):
    w = rng.normal(size=(samples, 3))
    w *= (3.0 * rng.random(samples) ** (1 / 3) / np.linalg.norm(w, axis=1))[:, None]
    orth = inv = rt = dd = 0.0
    for x in w:
        R = liealg.cay(x)
        orth = max(orth, *liealg.rotation_defect(R))
        inv = max(inv, float(np.max(np.abs(R @ liealg.cay(-x) - np.eye(3)))))
        rt = max(rt, float(np.max(np.abs(liealg.cay_inv(R) - x))))
        dd = max(dd, float(np.max(np.abs(liealg.dcay(x) @ liealg.dcay_inv(x) - np.eye(3)))))
    return [Check("cayley.rotation_defect", orth, 1e-12),
            Check("cayley.inverse_pair", inv, 1e-12),
            Check("cayley.roundtrip", rt, 1e-9),
            Check("cayley.dcay_product", dd, 1e-12)]


def symplectic_checks(rng, points: int = 20):
    osc = models.harmonic(1, hbar=0.1, omega=1.0)
    free = models.free_particle(1, hbar=0.1)
    z = rng.uniform(-1, 1, size=(points, 2))
    return [Check("symplectic.harmonic", max(symplecticity_defect(osc, q, p) for q, p in z), 1e-5),
            Check("symplectic.free_particle",
                  max(symplecticity_defect(free, q, p) for q, p in z), 1e-9)]


def noether_checks(rng, steps: int = 100):
    L2 = models.spline(2)
    start = cubic_nodes([rng.normal(size=2), rng.normal(size=2) * 0.1,
                         rng.normal(size=2) * 1e-3, rng.normal(size=2) * 1e-5], 4)
    traj = on_shell_trajectory(L2, start, steps)
    rot = noether_defect(L2, NoetherData(rotation_generator), traj)
    tra = noether_defect(L2, NoetherData(translation_generator([1.0, 0.0])), traj)
    # the quartic term makes long shots diverge, so the control stays short
    anh = models.anharmonic_spline(2, k=1.0)
    traj2 = on_shell_trajectory(anh, start, 10)
    neg = noether_defect(anh, NoetherData(translation_generator([1.0, 0.0])), traj2)
    return [Check("noether.rotation", rot, 1e-9),
            Check("noether.translation", tra, 1e-9),
            Check("noether.negative_control", neg, 1e-2, ">=")]


def order_checks(rng):
    tab = ep_order_check((1.0, 2.0, 3.0), [0.3, -0.5, 0.8], [0.1, 0.05, 0.025, 0.0125])
    return [Check("order.min_ratio", float(np.min(tab.ratios)), 1.8, ">="),
            Check("order.min_order", float(np.min(tab.orders)), 1.0, ">=")]


def run_suite(suite: str = "all", seed: int = 0):
    """Run one suite (or all) and return the list of checks."""
    names = SUITES if suite == "all" else (suite,)
    unknown = [s for s in names if s not in SUITES]
    if unknown:
        raise ValueError(f"unknown suite {unknown[0]!r}")
    fns = {"cayley": cayley_checks, "symplectic": symplectic_checks,
           "noether": noether_checks, "order": order_checks}
    out = []
    for name in names:
        out.extend(fns[name](np.random.default_rng(seed)))
    return out
