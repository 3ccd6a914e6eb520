"""
Exception hierarchy shared by every backend and the command-line front end.

Each class carries the process exit code the sweeper maps it to.
"""

from typing import Any, Dict, Optional


class InterferometerError(Exception):
    """Base class for all domain errors."""

    code: int = 1

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.message = message
        self.details: Dict[str, Any] = details

    def to_dict(self) -> Dict[str, Any]:
        return {"error": type(self).__name__, "message": self.message, **self.details}


# Parameter / configuration errors (exit 2)
class ParameterError(InterferometerError):
    code = 2


class NonPositiveGammaError(ParameterError):
    pass


class NegativeRateError(ParameterError):
    pass


class NonFiniteError(ParameterError):
    pass


class UnsupportedDetuningError(ParameterError):
    pass


class CutoffTooSmallError(ParameterError):
    pass


class PoleAtNonpositiveIntegerError(ParameterError):
    pass


class ConfigError(ParameterError):
    pass


# Solver errors (exit 3)
class SolverError(InterferometerError):
    code = 3


class SolverDidNotConvergeError(SolverError):
    pass


class DegenerateNullSpaceError(SolverError):
    pass


class StepSizeUnderflowError(SolverError):
    pass


class SingularMomentSystemError(SolverError):
    pass


class SeriesDidNotConvergeError(SolverError):
    pass


class FixedPointDidNotConvergeError(SolverError):
    pass


class MultipleSolutionsDetectedError(SolverError):
    pass


class EmptyCavityError(SolverError):
    pass


class EmptyBackgroundError(SolverError):
    pass


# Feasibility guard (exit 4)
class FeasibilityError(InterferometerError):
    code = 4


def exit_code_for(error: Optional[BaseException]) -> int:
    """Map an exception to the documented process exit code."""
    if error is None:
        return 0
    if isinstance(error, InterferometerError):
        return error.code
    return 3
