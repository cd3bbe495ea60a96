"""First-order discrete mechanics on a Lie groupoid.

Sign conventions: ``legendre_plus(g)`` pairs the left-invariant derivative of
the Lagrangian at ``g`` with the basis, and ``legendre_minus(h)`` the
right-invariant one (with the ``->X = -T(r_h o i)X`` convention). On Q x Q
these are ``D2 L(g)`` and ``-D1 L(h)``, and ``del_residual(g, h)`` is their
difference ``D2 L(g) + D1 L(h)``.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import liealg
from .groupoid import (Backend, GroupoidElement, PairBackend, SO3Backend,
                       dirderiv_left, dirderiv_right)
from .constants import TOL
from .errors import NotComposable
from .newton import SolverConfig, newton


@dataclass(frozen=True)
class Momentum:
    """Covector components against the dual basis, attached to a base point."""

    components: np.ndarray
    base: np.ndarray

    def __sub__(self, other):
        return self.components - other.components


@dataclass(frozen=True)
class DiscreteLagrangian1:
    """Scalar function on arrows. ``left(g)`` / ``right(g)`` optionally return
    the full vector of left / right directional derivatives over the basis."""

    fn: Callable[[GroupoidElement], float]
    backend: Backend
    left: Optional[Callable] = None
    right: Optional[Callable] = None

    def __call__(self, g):
        return self.fn(g)

    @classmethod
    def from_pair(cls, fn, m, d1=None, d2=None):
        """Build from ``fn(q0, q1)`` on R^m x R^m with optional partials."""
        be = PairBackend(m)
        left = right = None
        if d2 is not None:
            left = lambda g: np.atleast_1d(np.asarray(d2(*g.payload), dtype=float))
        if d1 is not None:
            right = lambda g: -np.atleast_1d(np.asarray(d1(*g.payload), dtype=float))
        return cls(lambda g: fn(*g.payload), be, left, right)

    def scaled(self, c):
        sc = lambda f: None if f is None else (lambda g: c * f(g))
        return DiscreteLagrangian1(lambda g: c * self.fn(g), self.backend,
                                   sc(self.left), sc(self.right))


def left_derivs(Ld: DiscreteLagrangian1, g):
    if Ld.left is not None:
        return np.asarray(Ld.left(g), dtype=float)
    return np.array([dirderiv_left(Ld.fn, g, e) for e in g.backend.basis()])


def right_derivs(Ld: DiscreteLagrangian1, g):
    if Ld.right is not None:
        return np.asarray(Ld.right(g), dtype=float)
    return np.array([dirderiv_right(Ld.fn, g, e) for e in g.backend.basis()])


def _check_composable(g, h):
    gap = g.backend.base_distance(g.target, h.source)
    if gap > TOL.composable:
        raise NotComposable(gap)


def del_residual(Ld: DiscreteLagrangian1, g, h):
    _check_composable(g, h)
    return left_derivs(Ld, g) - right_derivs(Ld, h)


def legendre_plus(Ld: DiscreteLagrangian1, g) -> Momentum:
    return Momentum(left_derivs(Ld, g), np.array(g.target))


def legendre_minus(Ld: DiscreteLagrangian1, h) -> Momentum:
    return Momentum(right_derivs(Ld, h), np.array(h.source))


# -- solvers ----------------------------------------------------------------

def chart_retract(h, z):
    """Re-centred retraction chart ``h . fiber_curve(target(h), z, 1)``."""
    return h.backend.left_translate(h, z, 1.0)


def predict(g):
    """Constant-velocity predictor for the arrow following ``g``."""
    be = g.backend
    if isinstance(be, PairBackend):
        q0, q1 = g.payload
        return be.element(q1, 2 * q1 - q0)
    if isinstance(be, SO3Backend):
        return g
    q, R, a = g.payload
    return GroupoidElement(be, (np.array(g.target), R, a))


def step(Ld: DiscreteLagrangian1, g, guess=None, cfg: SolverConfig = SolverConfig()):
    """Return ``h`` with ``del_residual(Ld, g, h) ~ 0``."""
    h0 = predict(g) if guess is None else guess
    _check_composable(g, h0)
    res = newton(lambda h: del_residual(Ld, g, h), chart_retract, h0, g.backend.rank, cfg)
    return res.state


def solve_legendre_minus(Ld: DiscreteLagrangian1, mu: Momentum, guess=None,
                         cfg: SolverConfig = SolverConfig()):
    """Arrow ``h`` from ``mu.base`` with ``legendre_minus(Ld, h) = mu``."""
    be = Ld.backend
    h0 = be.identity(mu.base) if guess is None else guess
    res = newton(lambda h: right_derivs(Ld, h) - mu.components, chart_retract, h0, be.rank, cfg)
    return res.state


def hamiltonian_step(Ld: DiscreteLagrangian1, mu: Momentum, guess=None,
                     cfg: SolverConfig = SolverConfig()) -> Momentum:
    """Discrete Hamiltonian flow ``F+ o (F-)^-1``."""
    return legendre_plus(Ld, solve_legendre_minus(Ld, mu, guess, cfg))


# -- discrete Euler-Poincare with the Cayley retraction ---------------------

def fd_gradient(f, x, step=TOL.fd_step):
    x = np.asarray(x, dtype=float)
    d = step * max(1.0, float(np.max(np.abs(x))) if x.size else 1.0)
    out = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = d
        out[i] = (f(x + e) - f(x - e)) / (2 * d)
    return out


def ep_residual(l, grad_l, eta_k, eta_k1, hbar):
    if not hbar > 0:
        raise ValueError("time step must be positive")
    grad = grad_l if grad_l is not None else (lambda x: fd_gradient(l, x))
    eta_k = np.asarray(eta_k, dtype=float)
    eta_k1 = np.asarray(eta_k1, dtype=float)
    return (liealg.dcay_inv(hbar * eta_k).T @ grad(eta_k)
            - liealg.dcay_inv(-hbar * eta_k1).T @ grad(eta_k1))


def ep_step(l, grad_l, eta_k, hbar, guess=None, cfg: SolverConfig = SolverConfig()):
    eta_k = np.asarray(eta_k, dtype=float)
    x0 = eta_k.copy() if guess is None else np.asarray(guess, dtype=float)
    res = newton(lambda x: ep_residual(l, grad_l, eta_k, x, hbar), lambda x, dz: x + dz,
                 x0, 3, cfg)
    return res.state


def ep_flow(l, grad_l, eta0, hbar, steps, cfg: SolverConfig = SolverConfig()):
    out = [np.asarray(eta0, dtype=float)]
    for _ in range(steps):
        out.append(ep_step(l, grad_l, out[-1], hbar, cfg=cfg))
    return np.array(out)
