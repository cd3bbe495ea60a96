"""Concrete Lie groupoids: the pair groupoid Q x Q, the Lie group SO(3) and
action groupoids Q x H with H = SO(3) x T^k acting on the right.

Elements are immutable :class:`GroupoidElement` values tagged with their
backend. Algebra vectors are plain arrays of coordinates in the canonical
basis (coordinate directions for flat factors, ``hat(e_i)`` for rotations).
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import liealg
from .constants import TOL
from .errors import NotComposable


@dataclass(frozen=True, eq=False)
class GroupoidElement:
    backend: "Backend"
    payload: tuple

    def __matmul__(self, other):
        return self.backend.compose(self, other)

    @property
    def source(self):
        return self.backend.source(self)

    @property
    def target(self):
        return self.backend.target(self)

    def inverse(self):
        return self.backend.inverse(self)

    def flat(self):
        """All payload numbers in one vector (rotations row-major)."""
        return np.concatenate([np.ravel(p) for p in self.payload if p is not None])

    def __repr__(self):
        return f"GroupoidElement({self.backend!r}, {self.flat()!r})"


class Backend:
    rank: int
    base_dim: int

    def base_distance(self, x, y):
        x, y = np.asarray(x), np.asarray(y)
        return float(np.max(np.abs(x - y))) if x.size else 0.0

    def is_composable(self, g, h, tol=TOL.composable):
        return self.base_distance(self.target(g), self.source(h)) <= tol

    def compose(self, g, h, tol=TOL.composable):
        gap = self.base_distance(self.target(g), self.source(h))
        if gap > tol:
            raise NotComposable(gap)
        return self._compose(g, h)

    def left_translate(self, g, X, t):
        """``g . fiber_curve(target(g), X, t)``."""
        return self._compose(g, self.fiber_curve(self.target(g), X, t))

    def right_translate_inv(self, g, X, t):
        """``fiber_curve(source(g), X, t)^-1 . g``."""
        return self._compose(self.inverse(self.fiber_curve(self.source(g), X, t)), g)

    def basis(self):
        return np.eye(self.rank)


class PairBackend(Backend):
    """Q x Q over Q = R^m; (q, s)(s, r) = (q, r)."""

    def __init__(self, m):
        if m < 1:
            raise ValueError("pair groupoid needs base dimension >= 1")
        self.rank = self.base_dim = int(m)

    def __repr__(self):
        return f"PairBackend({self.base_dim})"

    def element(self, q0, q1):
        q0 = np.atleast_1d(np.asarray(q0, dtype=float)).copy()
        q1 = np.atleast_1d(np.asarray(q1, dtype=float)).copy()
        if q0.shape != (self.base_dim,) or q1.shape != (self.base_dim,):
            raise ValueError(f"pair endpoints must have shape ({self.base_dim},)")
        return GroupoidElement(self, (q0, q1))

    def source(self, g):
        return g.payload[0]

    def target(self, g):
        return g.payload[1]

    def identity(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return GroupoidElement(self, (x.copy(), x.copy()))

    def inverse(self, g):
        return GroupoidElement(self, (g.payload[1], g.payload[0]))

    def _compose(self, g, h):
        return GroupoidElement(self, (g.payload[0], h.payload[1]))

    def fiber_curve(self, x, X, t):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return GroupoidElement(self, (x, x + t * np.asarray(X, dtype=float)))

    def random_element(self, rng, scale=1.0):
        return self.element(scale * rng.standard_normal(self.base_dim),
                            scale * rng.standard_normal(self.base_dim))


class SO3Backend(Backend):
    """SO(3) as a groupoid over a single point."""

    rank = 3
    base_dim = 0

    def __repr__(self):
        return "SO3Backend()"

    def element(self, R):
        return GroupoidElement(self, (liealg.check_rotation(R).copy(),))

    def source(self, g):
        return np.zeros(0)

    target = source

    def identity(self, x=None):
        return GroupoidElement(self, (np.eye(3),))

    def inverse(self, g):
        return GroupoidElement(self, (g.payload[0].T,))

    def _compose(self, g, h):
        return GroupoidElement(self, (g.payload[0] @ h.payload[0],))

    def fiber_curve(self, x, X, t):
        return GroupoidElement(self, (liealg.cay(t * np.asarray(X, dtype=float)),))

    def random_element(self, rng, scale=1.0):
        return GroupoidElement(self, (liealg.cay(scale * rng.standard_normal(3)),))


class ActionBackend(Backend):
    """Action groupoid Q x H over Q with H = SO(3)^{0|1} x T^k.

    The base point is ``(v, theta)`` with ``v`` in R^3 when the rotation factor
    is present, and ``theta`` in R^k (unwrapped torus angles). The right action
    is ``(v, theta) . (R, a) = (R^T v, theta + a)``. Payload: ``(q, R, a)``
    with ``R`` None when there is no rotation factor.
    """

    def __init__(self, rotation=True, torus=0):
        if torus < 0 or (not rotation and torus == 0):
            raise ValueError("action groupoid needs a rotation factor or torus dimension >= 1")
        self.rotation = bool(rotation)
        self.torus = int(torus)
        self.rank = self.base_dim = 3 * self.rotation + self.torus

    def __repr__(self):
        return f"ActionBackend(rotation={self.rotation}, torus={self.torus})"

    def element(self, q, R=None, a=None):
        q = np.atleast_1d(np.asarray(q, dtype=float)).copy()
        if q.shape != (self.base_dim,):
            raise ValueError(f"base point must have shape ({self.base_dim},)")
        if self.rotation:
            R = liealg.check_rotation(np.eye(3) if R is None else R).copy()
        else:
            R = None
        a = np.zeros(self.torus) if a is None else np.atleast_1d(np.asarray(a, dtype=float)).copy()
        if a.shape != (self.torus,):
            raise ValueError(f"torus increment must have shape ({self.torus},)")
        return GroupoidElement(self, (q, R, a))

    def act(self, q, R, a):
        if self.rotation:
            return np.concatenate([R.T @ q[:3], q[3:] + a])
        return q + a

    def source(self, g):
        return g.payload[0]

    def target(self, g):
        q, R, a = g.payload
        return self.act(q, R, a)

    def identity(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float)).copy()
        return GroupoidElement(self, (x, np.eye(3) if self.rotation else None, np.zeros(self.torus)))

    def inverse(self, g):
        q, R, a = g.payload
        return GroupoidElement(self, (self.act(q, R, a), None if R is None else R.T, -a))

    def _compose(self, g, h):
        q, R, a = g.payload
        _, S, b = h.payload
        return GroupoidElement(self, (q, None if R is None else R @ S, a + b))

    def fiber_curve(self, x, X, t):
        X = np.asarray(X, dtype=float)
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.rotation:
            return GroupoidElement(self, (x, liealg.cay(t * X[:3]), t * X[3:]))
        return GroupoidElement(self, (x, None, t * X))

    def random_element(self, rng, scale=1.0):
        q = scale * rng.standard_normal(self.base_dim)
        R = liealg.cay(scale * rng.standard_normal(3)) if self.rotation else None
        return GroupoidElement(self, (q, R, scale * rng.standard_normal(self.torus)))


# -- structural maps as functions -------------------------------------------

def source(g):
    return g.backend.source(g)


def target(g):
    return g.backend.target(g)


def identity(backend, x=None):
    return backend.identity(x)


def inverse(g):
    return g.backend.inverse(g)


def compose(g, h, tol=TOL.composable):
    return g.backend.compose(g, h, tol)


def is_composable(g, h, tol=TOL.composable):
    return g.backend.is_composable(g, h, tol)


def fiber_curve(backend, x, X, t):
    return backend.fiber_curve(x, X, t)


def fd_step(g, base=TOL.fd_step):
    """Central-difference step scaled by the size of ``g``'s flat coordinates."""
    return base * max(1.0, float(np.max(np.abs(g.flat()))) if g.flat().size else 1.0)


def dirderiv_left(f: Callable, g, X, step=None):
    """Derivative of ``f`` at ``g`` along the left-invariant field of ``X``."""
    be = g.backend
    d = fd_step(g) if step is None else step
    return (f(be.left_translate(g, X, d)) - f(be.left_translate(g, X, -d))) / (2 * d)


def dirderiv_right(f: Callable, g, X, step=None):
    """Derivative of ``f`` at ``g`` along the right-invariant field of ``X``,
    with the sign convention ``->X(g) = -T(r_g o i)(X)``."""
    be = g.backend
    d = fd_step(g) if step is None else step
    return -(f(be.right_translate_inv(g, X, d)) - f(be.right_translate_inv(g, X, -d))) / (2 * d)
