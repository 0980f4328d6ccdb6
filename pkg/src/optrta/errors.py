"""Exception types shared across the package (and mapped to CLI exit codes)."""


class OptRtaError(Exception):
    """Base class for all package errors."""


class ConfigError(OptRtaError, ValueError):
    """A plant/scenario/config file is malformed or inconsistent (exit code 2)."""


class PreconditionError(OptRtaError, ValueError):
    """An operation was called outside its precondition (exit code 3)."""


class RefusalError(PreconditionError):
    """An exhaustive computation was refused because it is too large."""


class InternalGuardError(OptRtaError, RuntimeError):
    """An internal safety guard tripped, e.g. an iteration cap (exit code 4)."""


class IntegrationError(OptRtaError, ArithmeticError):
    """Numerical integration produced a non-finite state."""

    def __init__(self, step: int, message: str = ""):
        self.step = step
        super().__init__(message or f"non-finite state at integration step {step}")


class UsageError(OptRtaError, RuntimeError):
    """An object was used in the wrong lifecycle state, e.g. stepping a finished episode."""
