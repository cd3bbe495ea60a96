"""Numerical tolerances shared by solvers, checks and tests."""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    rotation: float = 1e-9          # ||R^T R - I||_F and |det R - 1|
    skew: float = 1e-9              # symmetric part allowed in vee()
    composable: float = 1e-9        # base-point gap for composition
    near_singular: float = 1e8      # ||(R + I)^-1|| bound in cay_inv
    fd_step: float = 1e-5           # central differences of scalar functions
    jac_step: float = 1e-6          # forward differences of residuals
    newton_tol: float = 1e-10
    max_iter: int = 100
    contraction: float = 0.5
    armijo: float = 1e-4
    min_step: float = 1e-10
    singular_rcond: float = 1e-12
    on_shell: float = 1e-8


TOL = Tolerances()
