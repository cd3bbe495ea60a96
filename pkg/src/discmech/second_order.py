"""Second-order discrete Euler-Lagrange equations on composable pairs.

A trajectory is a composable list of arrows ``g_0 .. g_{M-1}``; ``N = M + 1``
counts nodes. Junction ``j`` sits between ``g_j`` and ``g_{j+1}``; varying it
replaces ``(g_j, g_{j+1})`` with ``(g_j c, c^-1 g_{j+1})`` for
``c = fiber_curve(target(g_j), z, 1)``, which keeps every other arrow, the
end points and the total product fixed. Boundary data are the first and last
arrows (first two and last two nodes), so junctions ``1 .. M-3`` are free.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .constants import TOL
from .discrete1 import chart_retract, predict
from .errors import DimensionMismatch, NoConvergence, NotComposable, SingularJacobian
from .groupoid import (Backend, GroupoidElement, PairBackend, SO3Backend, dirderiv_left,
                       dirderiv_right, fd_step)
from .newton import SolverConfig, newton


@dataclass(frozen=True)
class DiscreteLagrangian2:
    """``fn(g, h)`` on composable pairs. Pair-backend instances built with
    :meth:`from_triple` also keep the node form ``triple(q0, q1, q2)`` and its
    optional partials ``triple_grad -> (D1, D2, D3)``."""

    fn: Callable[[GroupoidElement, GroupoidElement], float]
    backend: Backend
    triple: Optional[Callable] = None
    triple_grad: Optional[Callable] = None
    complex_step: bool = False  # fn accepts complex payloads analytically

    def __call__(self, g, h):
        return self.fn(g, h)

    @classmethod
    def from_triple(cls, fn, m, grad=None):
        # the middle node is read from g's target
        return cls(lambda g, h: fn(g.payload[0], g.payload[1], h.payload[1]),
                   PairBackend(m), fn, grad)


@dataclass(frozen=True)
class ConstraintSet:
    """Scalar constraint functions ``phi(g, h)``; ``values`` stacks them."""

    fns: tuple
    complex_step: bool = False

    def __post_init__(self):
        object.__setattr__(self, "fns", tuple(self.fns))
        if len(self.fns) < 1:
            raise ValueError("a constraint set needs at least one function")

    @property
    def s(self):
        return len(self.fns)

    def values(self, g, h):
        return np.array([np.real(f(g, h)) for f in self.fns], dtype=float)


@dataclass
class SolveInfo:
    iterations: int = 0
    residual: float = 0.0
    constraint_max: float = 0.0
    action: float = 0.0
    rank: int = 0
    trace: list = field(default_factory=list)


@dataclass
class Trajectory:
    """Composable arrows plus one multiplier row per consecutive pair.

    ``origin`` anchors node reconstruction on the SO(3) backend, where arrows
    are relative rotations ``R_k^T R_{k+1}``.
    """

    elements: list
    multipliers: Optional[np.ndarray] = None
    info: Optional[SolveInfo] = None
    origin: Optional[np.ndarray] = None

    def __post_init__(self):
        self.elements = list(self.elements)
        for k in range(len(self.elements) - 1):
            g, h = self.elements[k], self.elements[k + 1]
            gap = g.backend.base_distance(g.target, h.source)
            if gap > TOL.composable:
                raise NotComposable(gap)

    @property
    def backend(self):
        return self.elements[0].backend

    @property
    def N(self):
        return len(self.elements) + 1

    @classmethod
    def from_nodes(cls, nodes, backend=None):
        """Pair-backend trajectory through the given nodes (rows)."""
        nodes = np.asarray(nodes, dtype=float)
        if nodes.ndim == 1:
            nodes = nodes[:, None]
        be = PairBackend(nodes.shape[1]) if backend is None else backend
        return cls([be.element(nodes[k], nodes[k + 1]) for k in range(len(nodes) - 1)])

    @classmethod
    def from_rotations(cls, rotations):
        be = SO3Backend()
        Rs = [np.asarray(R, dtype=float) for R in rotations]
        return cls([be.element(Rs[k].T @ Rs[k + 1]) for k in range(len(Rs) - 1)], origin=Rs[0])

    def nodes(self):
        be = self.backend
        if isinstance(be, SO3Backend):
            R = np.eye(3) if self.origin is None else self.origin
            out = [R]
            for g in self.elements:
                out.append(out[-1] @ g.payload[0])
            return np.array(out)
        return np.array([self.elements[0].source] + [g.target for g in self.elements])


# -- residuals --------------------------------------------------------------

def _check_window(w):
    if len(w) != 4:
        raise DimensionMismatch("a window holds exactly four arrows")
    for a, b in zip(w[:-1], w[1:]):
        gap = a.backend.base_distance(a.target, b.source)
        if gap > TOL.composable:
            raise NotComposable(gap)


def _pair_nodes(w):
    return [w[0].payload[0], w[0].payload[1]] + [g.payload[1] for g in w[1:]]


COMPLEX_STEP = 1e-30


def window_parts(fns, w, basis=None, complex_step=False):
    """Derivatives along the junction variation of each of the three pair
    terms of a window, for every function in ``fns``.

    Returns ``D[i, A, gamma]`` where ``i`` indexes the pairs (g1,g2), (g2,g3),
    (g3,g4) and ``A`` the functions. Central differences by default; with
    ``complex_step`` the variation parameter is imaginary and the derivative
    is exact to rounding, which requires every function to be analytic in
    the payload entries.
    """
    g1, g2, g3, g4 = w
    be = g2.backend
    basis = be.basis() if basis is None else basis
    x = g2.target
    D = np.zeros((3, len(fns), len(basis)))
    if complex_step:
        for c, e in enumerate(basis):
            h = be.fiber_curve(x, e, 1j * COMPLEX_STEP)
            a = be._compose(g2, h)
            b = be._compose(be.inverse(h), g3)
            vals = [[f(g1, a) for f in fns], [f(a, b) for f in fns], [f(b, g4) for f in fns]]
            D[:, :, c] = np.imag(np.array(vals)) / COMPLEX_STEP
        return D
    d = max(fd_step(g2), fd_step(g3))
    for c, e in enumerate(basis):
        vals = []
        for t in (d, -d):
            h = be.fiber_curve(x, e, t)
            a = be._compose(g2, h)
            b = be._compose(be.inverse(h), g3)
            vals.append([[f(g1, a) for f in fns], [f(a, b) for f in fns], [f(b, g4) for f in fns]])
        D[:, :, c] = (np.array(vals[0]) - np.array(vals[1])) / (2 * d)
    return D


def so_residual(L2: DiscreteLagrangian2, w: Sequence):
    _check_window(w)
    if L2.triple_grad is not None and isinstance(L2.backend, PairBackend):
        return so_residual_pair(L2.triple, *_pair_nodes(w), grad=L2.triple_grad)
    return window_parts([L2.fn], w, complex_step=L2.complex_step)[:, 0, :].sum(axis=0)


def _partial(f, q, k, d=TOL.fd_step):
    """Central-difference gradient of ``f`` in its ``k``-th argument."""
    q = [np.asarray(v, dtype=float) for v in q]
    step = d * max(1.0, max(float(np.max(np.abs(v))) for v in q))
    out = np.empty(q[k].size)
    for i in range(q[k].size):
        qp = [v.copy() for v in q]
        qm = [v.copy() for v in q]
        qp[k][i] += step
        qm[k][i] -= step
        out[i] = (f(*qp) - f(*qm)) / (2 * step)
    return out


def so_residual_pair(triple, q1, q2, q3, q4, q5, grad=None):
    """``D3 L(q1,q2,q3) + D2 L(q2,q3,q4) + D1 L(q3,q4,q5)``."""
    q = [np.atleast_1d(np.asarray(v, dtype=float)) for v in (q1, q2, q3, q4, q5)]
    if grad is not None:
        return (np.asarray(grad(q[0], q[1], q[2])[2]) + np.asarray(grad(q[1], q[2], q[3])[1])
                + np.asarray(grad(q[2], q[3], q[4])[0]))
    return (_partial(triple, q[0:3], 2) + _partial(triple, q[1:4], 1)
            + _partial(triple, q[2:5], 0))


def so_residual_group(L2: DiscreteLagrangian2, g0, g1, g2, g3):
    """Rotation-matrix window ``(g_{k-1}, g_k, g_{k+1}, g_{k+2})``, assembled
    from separate left and right trivialized partials."""
    be = SO3Backend()
    w = [x if isinstance(x, GroupoidElement) else be.element(x) for x in (g0, g1, g2, g3)]
    f = L2.fn
    out = np.empty(3)
    for c, e in enumerate(be.basis()):
        left = (dirderiv_left(lambda a: f(w[0], a), w[1], e)
                + dirderiv_left(lambda a: f(a, w[2]), w[1], e))
        right = (dirderiv_right(lambda b: f(w[1], b), w[2], e)
                 + dirderiv_right(lambda b: f(b, w[3]), w[2], e))
        out[c] = left - right
    return out


def constrained_residual(L2: DiscreteLagrangian2, C: ConstraintSet, w, lam1, lam2, lam3):
    _check_window(w)
    D = window_parts([L2.fn] + list(C.fns), w, complex_step=L2.complex_step and C.complex_step)
    lam = np.array([lam1, lam2, lam3], dtype=float).reshape(3, C.s)
    first = D[:, 0, :].sum(axis=0) + np.einsum("ias,ia->s", D[:, 1:, :], lam)
    second = np.concatenate([C.values(w[0], w[1]), C.values(w[1], w[2]), C.values(w[2], w[3])])
    return first, second


def action_sum(L2: DiscreteLagrangian2, traj: Trajectory, constraints: ConstraintSet = None,
               multipliers=None):
    """Sum of ``L2`` over consecutive pairs, plus ``lambda . Phi`` terms when
    constraints and multipliers are given."""
    els = traj.elements
    total = 0.0
    for k in range(len(els) - 1):
        total += float(np.real(L2.fn(els[k], els[k + 1])))
        if constraints is not None and multipliers is not None:
            total += float(np.asarray(multipliers)[k] @ constraints.values(els[k], els[k + 1]))
    return total


# -- solvers ----------------------------------------------------------------

def solve_step(L2: DiscreteLagrangian2, g1, g2, g3, guess=None, cfg: SolverConfig = SolverConfig()):
    """Return ``g4`` with ``so_residual(L2, (g1, g2, g3, g4)) ~ 0``."""
    g4 = predict(g3) if guess is None else guess
    _check_window([g1, g2, g3, g4])
    res = newton(lambda h: so_residual(L2, [g1, g2, g3, h]), chart_retract, g4,
                 g3.backend.rank, cfg)
    return res.state


def shoot(L2: DiscreteLagrangian2, start: Sequence, steps: int, cfg: SolverConfig = SolverConfig()):
    """Extend three initial arrows by ``steps`` calls of :func:`solve_step`."""
    els = list(start)
    for _ in range(steps):
        els.append(solve_step(L2, els[-3], els[-2], els[-1], cfg=cfg))
    return Trajectory(els)


@dataclass
class BvpProblem:
    L2: DiscreteLagrangian2
    guess: Trajectory
    constraints: Optional[ConstraintSet] = None
    cfg: SolverConfig = SolverConfig()

    def __post_init__(self):
        if self.guess.N < 5:
            raise ValueError("boundary-value problems need N >= 5 nodes")

    @property
    def N(self):
        return self.guess.N


class _BvpState:
    __slots__ = ("elements", "lam", "_parts")

    def __init__(self, elements, lam):
        self.elements = elements
        self.lam = lam
        self._parts = {}


class _BvpSystem:
    def __init__(self, p: BvpProblem):
        self.p = p
        self.be = p.guess.backend
        self.r = self.be.rank
        self.M = len(p.guess.elements)
        self.C = p.constraints
        self.s = 0 if self.C is None else self.C.s
        self.fns = [p.L2.fn] + ([] if self.C is None else list(self.C.fns))
        self.cs = p.L2.complex_step and (self.C is None or self.C.complex_step)
        self.free = list(range(1, self.M - 2))
        self.nz = self.r * len(self.free)
        self.n = self.nz + self.s * (self.M - 1)

    def parts(self, st, j, els=None):
        if els is not None:
            return window_parts(self.fns, els[j - 1:j + 3], complex_step=self.cs)
        if j not in st._parts:
            st._parts[j] = window_parts(self.fns, st.elements[j - 1:j + 3], complex_step=self.cs)
        return st._parts[j]

    def window_res(self, D, lam, j):
        out = D[:, 0, :].sum(axis=0)
        if self.s:
            out = out + np.einsum("ias,ia->s", D[:, 1:, :], lam[j - 1:j + 2])
        return out

    def phi(self, els, k):
        return self.C.values(els[k], els[k + 1])

    def residual(self, st):
        rows = [self.window_res(self.parts(st, j), st.lam, j) for j in self.free]
        if self.s:
            rows += [self.phi(st.elements, k) for k in range(self.M - 1)]
        return np.concatenate(rows) if rows else np.zeros(0)

    def perturb(self, els, zs):
        new = list(els)
        for j, z in zs:
            c = self.be.fiber_curve(els[j].target, z, 1.0)
            new[j] = self.be._compose(new[j], c)
            new[j + 1] = self.be._compose(self.be.inverse(c), new[j + 1])
        return new

    def retract(self, st, dz):
        zs = [(j, dz[i * self.r:(i + 1) * self.r]) for i, j in enumerate(self.free)]
        lam = st.lam + dz[self.nz:].reshape(st.lam.shape)
        return _BvpState(self.perturb(st.elements, zs), lam)

    def jacobian(self, st):
        r, s, h = self.r, self.s, self.p.cfg.jac_step
        nf = len(self.free)
        J = np.zeros((nf * r + s * (self.M - 1), self.n))
        row = {j: i * r for i, j in enumerate(self.free)}
        base = {j: self.window_res(self.parts(st, j), st.lam, j) for j in self.free}
        for i, j in enumerate(self.free):
            for c in range(r):
                z = np.zeros(r)
                z[c] = h
                els = self.perturb(st.elements, [(j, z)])
                for jj in range(max(1, j - 2), min(self.M - 3, j + 2) + 1):
                    rj = self.window_res(self.parts(st, jj, els), st.lam, jj)
                    J[row[jj]:row[jj] + r, i * r + c] = (rj - base[jj]) / h
                for k in range(max(0, j - 1), min(self.M - 2, j + 1) + 1) if s else ():
                    o = nf * r + k * s
                    J[o:o + s, i * r + c] = (self.phi(els, k) - self.phi(st.elements, k)) / h
        if s:
            for j in self.free:
                D = self.parts(st, j)
                for i in range(3):
                    k = j - 1 + i
                    J[row[j]:row[j] + r, self.nz + k * s:self.nz + (k + 1) * s] = D[i, 1:, :].T
        return J

    def initial_multipliers(self, st):
        """Least-squares multipliers for the stationarity rows at ``st``."""
        A = np.zeros((self.nz, self.s * (self.M - 1)))
        g = np.zeros(self.nz)
        for i, j in enumerate(self.free):
            D = self.parts(st, j)
            g[i * self.r:(i + 1) * self.r] = D[:, 0, :].sum(axis=0)
            for q in range(3):
                k = j - 1 + q
                A[i * self.r:(i + 1) * self.r, k * self.s:(k + 1) * self.s] = D[q, 1:, :].T
        lam = np.linalg.lstsq(A, -g, rcond=None)[0]
        return lam.reshape(self.M - 1, self.s)

    def constraint_max(self, st):
        if not self.s:
            return 0.0
        return float(max(np.max(np.abs(self.phi(st.elements, k))) for k in range(self.M - 1)))


def solve_bvp(p: BvpProblem) -> Trajectory:
    """Global damped Gauss-Newton on junction charts and multipliers.

    Raises SingularJacobian (with rank) when the stacked Jacobian is
    rank-deficient, or NoConvergence carrying the iteration trace and the
    constraint maximum; an unreachable constraint block is reported as
    NoConvergence even when the Jacobian is also rank-deficient.
    """
    sys_ = _BvpSystem(p)
    lam0 = np.zeros((sys_.M - 1, sys_.s))
    if p.guess.multipliers is not None and sys_.s:
        lam0 = np.asarray(p.guess.multipliers, dtype=float).reshape(lam0.shape).copy()
    st0 = _BvpState(list(p.guess.elements), lam0)
    if sys_.s and p.guess.multipliers is None:
        st0 = _BvpState(st0.elements, sys_.initial_multipliers(st0))

    def on_fail(st, r, J, rank):
        cmax = sys_.constraint_max(st)
        if J is not None and rank < sys_.n:
            grad = J.T @ r
            stationary = np.linalg.norm(grad) <= 1e-8 * max(1.0, np.linalg.norm(J)) * np.linalg.norm(r)
            if stationary and cmax > p.cfg.tol:
                raise NoConvergence(f"constraints cannot be met: max |Phi| = {cmax:.3e}",
                                    float(np.max(np.abs(r))), [], cmax)
            raise SingularJacobian(f"stacked Jacobian rank {rank} of {sys_.n}", rank, sys_.n)
        msg = f"no convergence: residual {float(np.max(np.abs(r))):.3e}"
        if sys_.s:
            msg += f", max |Phi| = {cmax:.3e}"
        raise NoConvergence(msg, float(np.max(np.abs(r))), [], cmax)

    res = newton(sys_.residual, sys_.retract, st0, sys_.n, p.cfg,
                 jacobian=sys_.jacobian, mode="lstsq", on_fail=on_fail)
    st = res.state
    mult = st.lam if sys_.s else None
    traj = Trajectory(st.elements, mult, origin=p.guess.origin)
    traj.info = SolveInfo(iterations=res.iterations, residual=res.residual_norm,
                          constraint_max=sys_.constraint_max(st),
                          action=action_sum(p.L2, traj), rank=res.rank, trace=res.trace)
    return traj


def window_residuals(L2: DiscreteLagrangian2, traj: Trajectory, constraints=None):
    """Residual rows at every free junction (with multipliers if constrained)."""
    p = BvpProblem(L2, traj, constraints)
    sys_ = _BvpSystem(p)
    lam = (np.zeros((sys_.M - 1, sys_.s)) if traj.multipliers is None
           else np.asarray(traj.multipliers, dtype=float).reshape(sys_.M - 1, sys_.s))
    st = _BvpState(traj.elements, lam)
    return np.array([sys_.window_res(sys_.parts(st, j), lam, j) for j in sys_.free])


def perturb_junction(traj: Trajectory, j: int, z):
    """Copy of ``traj`` with junction ``j`` moved along chart vector ``z``."""
    be = traj.backend
    c = be.fiber_curve(traj.elements[j].target, np.asarray(z, dtype=float), 1.0)
    els = list(traj.elements)
    els[j] = be._compose(els[j], c)
    els[j + 1] = be._compose(be.inverse(c), els[j + 1])
    return Trajectory(els, traj.multipliers, origin=traj.origin)
