"""Exception hierarchy."""


class DiscMechError(Exception):
    pass


class NotSkew(DiscMechError, ValueError):
    pass


class NotRotation(DiscMechError, ValueError):
    pass


class NearSingular(DiscMechError, ValueError):
    def __init__(self, msg, norm=float("inf")):
        super().__init__(msg)
        self.norm = norm


class DimensionMismatch(DiscMechError, ValueError):
    pass


class NotComposable(DiscMechError, ValueError):
    def __init__(self, defect):
        super().__init__(f"elements not composable: base-point gap {defect:.3e}")
        self.defect = defect


class InvalidSplit(DiscMechError, ValueError):
    pass


class NotOnShell(DiscMechError, ValueError):
    def __init__(self, residual):
        super().__init__(f"trajectory is not a solution: residual {residual:.3e}")
        self.residual = residual


class SolverError(DiscMechError, RuntimeError):
    pass


class SingularJacobian(SolverError):
    def __init__(self, msg, rank=None, size=None):
        super().__init__(msg)
        self.rank = rank
        self.size = size


class NoConvergence(SolverError):
    def __init__(self, msg, residual=float("nan"), trace=(), constraint_max=None):
        super().__init__(msg)
        self.residual = residual
        self.trace = list(trace)
        self.constraint_max = constraint_max


class ConfigError(DiscMechError, ValueError):
    pass
