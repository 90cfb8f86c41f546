"""Exception hierarchy. The CLI maps these onto exit codes."""


class MicroclimateError(Exception):
    """Base class for all package errors."""


class DomainError(MicroclimateError, ValueError):
    """Input outside the domain of an operation (bad bounds, coverage gaps, ...)."""


class DataError(DomainError):
    """A scenario or series file violates its schema."""


class ConvergenceError(MicroclimateError, ArithmeticError):
    """An iterative numeric routine failed to converge."""


class SolverError(MicroclimateError, RuntimeError):
    """An optimizer failed in a way the caller cannot absorb."""

    def __init__(self, message, cycle=None):
        super().__init__(message if cycle is None else f"cycle {cycle}: {message}")
        self.cycle = cycle
