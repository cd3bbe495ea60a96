"""Discrete first- and second-order variational mechanics on Lie groupoids."""

from . import liealg, groupoid, discrete1, second_order, optimal_control, verify, models
from .constants import TOL, Tolerances
from .discrete1 import DiscreteLagrangian1, Momentum
from .errors import (ConfigError, DimensionMismatch, DiscMechError, InvalidSplit, NearSingular,
                     NoConvergence, NotComposable, NotOnShell, NotRotation, NotSkew,
                     SingularJacobian, SolverError)
from .groupoid import ActionBackend, GroupoidElement, PairBackend, SO3Backend
from .newton import SolverConfig
from .second_order import (BvpProblem, ConstraintSet, DiscreteLagrangian2, SolveInfo,
                           Trajectory, solve_bvp)

__version__ = "0.1.0"

__all__ = [
    "liealg", "groupoid", "discrete1", "second_order", "optimal_control", "verify", "models",
    "TOL", "Tolerances", "DiscreteLagrangian1", "Momentum", "ConfigError", "DimensionMismatch",
    "DiscMechError", "InvalidSplit", "NearSingular", "NoConvergence", "NotComposable",
    "NotOnShell", "NotRotation", "NotSkew", "SingularJacobian", "SolverError", "ActionBackend",
    "GroupoidElement", "PairBackend", "SO3Backend", "SolverConfig", "BvpProblem",
    "ConstraintSet", "DiscreteLagrangian2", "SolveInfo", "Trajectory", "solve_bvp",
]
