"""Damped Newton iteration in a re-centred chart.

The unknown is an arbitrary state object. ``retract(state, dz)`` maps a
chart vector to a new state centred at ``state``; Jacobians are forward
differences of ``residual`` through that chart unless an explicit
``jacobian(state)`` is supplied.
"""

from dataclasses import dataclass, field, replace
from typing import Any, Callable, Optional

import numpy as np

from .constants import TOL
from .errors import NoConvergence, SingularJacobian


@dataclass(frozen=True)
class SolverConfig:
    tol: float = TOL.newton_tol
    max_iter: int = TOL.max_iter
    contraction: float = TOL.contraction
    armijo: float = TOL.armijo
    fd_step: float = TOL.fd_step
    jac_step: float = TOL.jac_step
    jacobian: str = "fd"  # or "analytic" when a jacobian callback is given
    min_step: float = TOL.min_step
    singular_rcond: float = TOL.singular_rcond
    polish: int = 0  # extra strict steps after convergence, kept while they help

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not 0 < self.contraction < 1:
            raise ValueError("contraction must lie in (0, 1)")
        if self.jacobian not in ("fd", "analytic"):
            raise ValueError("jacobian mode must be 'fd' or 'analytic'")
        if self.polish < 0:
            raise ValueError("polish must be >= 0")

    def with_overrides(self, **kw):
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


@dataclass
class NewtonResult:
    state: Any
    residual: np.ndarray
    iterations: int
    rank: int
    trace: list = field(default_factory=list)

    @property
    def residual_norm(self):
        return float(np.max(np.abs(self.residual))) if self.residual.size else 0.0


def fd_jacobian(residual, retract, state, n, step, r0=None):
    r0 = residual(state) if r0 is None else r0
    J = np.empty((r0.size, n))
    for j in range(n):
        dz = np.zeros(n)
        dz[j] = step
        J[:, j] = (residual(retract(state, dz)) - r0) / step
    return J


def _safe_inv(v):
    out = np.ones_like(v)
    nz = v > 0
    out[nz] = 1.0 / v[nz]
    return out


def _inf(r):
    return float(np.max(np.abs(r))) if r.size else 0.0


def newton(residual: Callable, retract: Callable, state, n: int,
           cfg: SolverConfig = SolverConfig(), jacobian: Optional[Callable] = None,
           mode: str = "strict", on_fail: Optional[Callable] = None) -> NewtonResult:
    """Drive ``residual`` to zero (inf-norm below ``cfg.tol``).

    ``mode="strict"`` requires a well-conditioned square Jacobian and raises
    SingularJacobian otherwise, before the convergence test. ``mode="lstsq"``
    takes least-squares steps on the row- and column-equilibrated Jacobian
    and tests convergence first.
    A supplied ``jacobian(state)`` replaces the generic forward-difference
    Jacobian. ``on_fail(state, r, J, rank)`` may raise a more specific error when the
    line search stalls.
    """
    J = None
    r = np.asarray(residual(state), dtype=float)
    trace = [_inf(r)]
    rank = n
    for it in range(cfg.max_iter + 1):
        converged = _inf(r) <= cfg.tol
        if mode == "lstsq" and converged:
            return NewtonResult(state, r, it, rank, trace)
        if it == cfg.max_iter and converged:
            return NewtonResult(state, r, it, rank, trace)
        J = jacobian(state) if jacobian is not None else fd_jacobian(residual, retract, state, n, cfg.jac_step, r)
        if mode == "lstsq":
            # equilibrate columns then rows before the rank test and the solve
            cs = _safe_inv(np.linalg.norm(J, axis=0))
            Js = J * cs
            rs = _safe_inv(np.linalg.norm(Js, axis=1))
            Js = Js * rs[:, None]
        else:
            Js = J
        sv = np.linalg.svd(Js, compute_uv=False) if Js.size else np.zeros(0)
        smax = sv[0] if sv.size else 0.0
        rank = int(np.sum(sv > cfg.singular_rcond * smax)) if smax > 0 else 0
        if mode == "strict":
            if smax == 0.0 or sv[-1] / smax < cfg.singular_rcond or J.shape[0] != J.shape[1]:
                raise SingularJacobian(f"Jacobian rank {rank} of {n}", rank, n)
            if converged:
                state, r = _polish(residual, retract, state, r, J, jacobian, n, cfg)
                return NewtonResult(state, r, it, rank, trace)
        if it == cfg.max_iter:
            break
        if mode == "strict":
            dz = np.linalg.solve(J, -r)
        else:
            dz = np.linalg.lstsq(Js, -r * rs, rcond=cfg.singular_rcond)[0] * cs

        f0 = 0.5 * float(r @ r)
        slope = -2.0 * f0 if mode == "strict" else float(r @ (J @ dz))
        if -slope <= 1e-12 * f0:
            # no descent direction left: least-squares stationary point
            if on_fail is not None:
                on_fail(state, r, J, rank)
            raise NoConvergence(f"stalled at residual {_inf(r):.3e}", _inf(r), trace)
        t = 1.0
        while True:
            cand = retract(state, t * dz)
            rc = np.asarray(residual(cand), dtype=float)
            fc = 0.5 * float(rc @ rc)
            if np.isfinite(fc) and fc <= f0 + cfg.armijo * t * slope:
                break
            t *= cfg.contraction
            if t < cfg.min_step:
                if on_fail is not None:
                    on_fail(state, r, J, rank)
                raise NoConvergence(f"line search stalled at residual {_inf(r):.3e}",
                                    _inf(r), trace)
        state, r = cand, rc
        trace.append(_inf(r))
    if on_fail is not None:
        on_fail(state, r, J, rank)
    raise NoConvergence(f"no convergence after {cfg.max_iter} iterations, residual {_inf(r):.3e}",
                        _inf(r), trace)


def _polish(residual, retract, state, r, J, jacobian, n, cfg):
    for _ in range(cfg.polish):
        cand = retract(state, np.linalg.solve(J, -r))
        rc = np.asarray(residual(cand), dtype=float)
        if not _inf(rc) < _inf(r):
            break
        state, r = cand, rc
        J = jacobian(state) if jacobian is not None else fd_jacobian(residual, retract, state, n, cfg.jac_step, r)
    return state, r
