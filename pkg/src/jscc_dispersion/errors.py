"""Exception hierarchy shared by every module.

Each class carries the process exit code the CLI reports when it escapes:
2 for configuration problems, 3 for numerical failures.
"""

from __future__ import annotations


class ToolkitError(Exception):
    exit_code = 3


class ConfigError(ToolkitError):
    exit_code = 2


class DomainError(ToolkitError, ValueError):
    """Argument outside the domain of a function (e.g. a probability not in (0, 1))."""

    exit_code = 2


class ChainError(ToolkitError, ValueError):
    exit_code = 2


class NonStochasticError(ChainError):
    pass


class ReducibleError(ChainError):
    pass


class PeriodicError(ChainError):
    def __init__(self, message: str, period: int):
        super().__init__(message)
        self.period = period


class HiddenMarginalError(ChainError):
    def __init__(self, message: str, witness: tuple[int, int, int, int]):
        super().__init__(message)
        # (x'_1, x'_2, z, z')
        self.witness = witness


class NonConvergenceError(ToolkitError):
    pass


class NegativeVarianceError(ToolkitError):
    pass


class QuadratureFailureError(ToolkitError):
    pass


class OptimizationFailureError(ToolkitError):
    pass


class InfeasiblePolytopeError(ToolkitError):
    pass


class KindMismatchError(ToolkitError, TypeError):
    exit_code = 2


class DegenerateSourceError(ToolkitError):
    pass


class TooLargeError(ToolkitError, ValueError):
    exit_code = 2
