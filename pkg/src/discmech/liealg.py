"""Rotation algebra: hat/vee, the Cayley map on SO(3) and its trivialized
derivatives, plus a structure-equation check for Lie algebroid data."""

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .constants import TOL
from .errors import DimensionMismatch, NearSingular, NotRotation, NotSkew

I3 = np.eye(3)

ArrayOrField = Union[np.ndarray, Callable[[np.ndarray], np.ndarray]]


def hat(v):
    """Skew matrix with ``hat(v) @ w == cross(v, w)``."""
    x, y, z = np.asarray(v)
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def vee(m, tol=TOL.skew):
    m = np.asarray(m, dtype=float)
    sym = 0.5 * (m + m.T)
    if np.max(np.abs(sym)) > tol:
        raise NotSkew(f"symmetric part {np.max(np.abs(sym)):.3e} exceeds {tol:.1e}")
    skew = 0.5 * (m - m.T)
    return np.array([skew[2, 1], skew[0, 2], skew[1, 0]])


def rotation_defect(m):
    """Return (||m^T m - I||_F, |det m - 1|)."""
    m = np.asarray(m, dtype=float)
    return float(np.linalg.norm(m.T @ m - I3)), float(abs(np.linalg.det(m) - 1.0))


def check_rotation(m, tol=TOL.rotation):
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3) or not np.all(np.isfinite(m)):
        raise NotRotation("expected a finite 3x3 matrix")
    orth, det = rotation_defect(m)
    if orth > tol or det > tol:
        raise NotRotation(f"orthogonality defect {orth:.3e}, determinant defect {det:.3e}")
    return m


def project_to_so3(m):
    """Nearest rotation in the Frobenius sense (polar factor)."""
    u, _, vt = np.linalg.svd(np.asarray(m, dtype=float))
    d = np.sign(np.linalg.det(u @ vt))
    return u @ np.diag([1.0, 1.0, d]) @ vt


def cay(omega):
    w = np.asarray(omega)
    if w.dtype.kind != "c":
        w = w.astype(float)
    W = hat(w)
    return I3 + (4.0 / (4.0 + w @ w)) * (W + 0.5 * W @ W)


def cay_inv(r, bound=TOL.near_singular):
    """Inverse Cayley map, ``hat(w) = 2 (R - I)(R + I)^-1``.

    For a rotation this equals ``w = 2 vee(R - R^T) / (1 + tr R)`` and
    ``||(R + I)^-1||_2 = (1 + tr R)^-1/2``, which is what is evaluated.
    Undefined for rotations by pi; raises NearSingular when that norm
    exceeds ``bound``.
    """
    r = np.asarray(r)
    c = 1.0 + r[0, 0] + r[1, 1] + r[2, 2]
    if not np.real(c) > 1.0 / bound ** 2:
        norm = float("inf") if np.real(c) <= 0 else float(np.real(c)) ** -0.5
        raise NearSingular(f"||(R + I)^-1|| = {norm:.3e} exceeds {bound:.1e}", norm)
    return (2.0 / c) * np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]])


def dcay(omega):
    w = np.asarray(omega, dtype=float)
    return (2.0 / (4.0 + w @ w)) * (2.0 * I3 + hat(w))


def dcay_inv(omega):
    w = np.asarray(omega, dtype=float)
    return I3 - 0.5 * hat(w) + 0.25 * np.outer(w, w)


# -- structure equations ----------------------------------------------------

def levi_civita():
    eps = np.zeros((3, 3, 3))
    for a, b, c in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        eps[a, b, c] = 1.0
        eps[b, a, c] = -1.0
    return eps


@dataclass(frozen=True)
class StructureData:
    """Local structure functions of a Lie algebroid of rank ``rank``.

    ``C[a, b, g]`` holds C^g_{ab} and ``rho[i, a]`` holds rho^i_a; either may be
    a callable of the base point ``q`` instead of a constant array.
    """

    rank: int
    C: ArrayOrField
    rho: ArrayOrField
    q: np.ndarray = None


def _field_and_grad(field, q, step):
    if not callable(field):
        val = np.asarray(field, dtype=float)
        return val, np.zeros((q.size,) + val.shape)
    val = np.asarray(field(q), dtype=float)
    grad = np.empty((q.size,) + val.shape)
    for j in range(q.size):
        dq = np.zeros_like(q)
        dq[j] = step
        grad[j] = (np.asarray(field(q + dq)) - np.asarray(field(q - dq))) / (2 * step)
    return val, grad


def check_structure(data: StructureData, step=TOL.fd_step):
    """Max violation of the anchor compatibility and the cyclic Jacobi
    structure equations. Returns ``(anchor_defect, jacobi_defect)``."""
    r = data.rank
    rho0 = data.rho(data.q) if callable(data.rho) else data.rho
    m = np.asarray(rho0).shape[0]
    q = np.zeros(m) if data.q is None else np.asarray(data.q, dtype=float)
    if q.size != m:
        raise DimensionMismatch(f"base point has {q.size} coordinates, anchor has {m} rows")
    C, dC = _field_and_grad(data.C, q, step)
    rho, drho = _field_and_grad(data.rho, q, step)
    if C.shape != (r, r, r):
        raise DimensionMismatch(f"structure constants have shape {C.shape}, expected {(r, r, r)}")
    if rho.shape != (m, r):
        raise DimensionMismatch(f"anchor has shape {rho.shape}, expected {(m, r)}")

    # rho_a^j d_j rho_b^i - rho_b^j d_j rho_a^i - rho_g^i C^g_ab   ->  [i, a, b]
    lie = np.einsum("ja,jib->iab", rho, drho)
    anchor = lie - lie.transpose(0, 2, 1) - np.einsum("ig,abg->iab", rho, C)

    # rho_a^i d_i C^n_bc + C^n_am C^m_bc, summed over cyclic (a, b, c)  ->  [a, b, c, n]
    term = np.einsum("ia,ibcn->abcn", rho, dC) + np.einsum("amn,bcm->abcn", C, C)
    jacobi = term + term.transpose(1, 2, 0, 3) + term.transpose(2, 0, 1, 3)
    a_def = float(np.max(np.abs(anchor))) if anchor.size else 0.0
    j_def = float(np.max(np.abs(jacobi))) if jacobi.size else 0.0
    return a_def, j_def
