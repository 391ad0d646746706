"""Exception hierarchy shared across the package."""


class TsslabError(Exception):
    """Base class for all package errors."""


class ConfigurationError(TsslabError, ValueError):
    """Invalid grid, run configuration or config file."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class UsageError(TsslabError, ValueError):
    """Bad call: unknown column, too-short trajectory, missing input."""


class DomainError(TsslabError, ValueError):
    """Argument outside the domain where a formula is defined."""


class InvariantViolation(TsslabError):
    """A monitored invariant of the simulation left its tolerance band."""

    def __init__(self, quantity, value, bound, t=None):
        msg = f"{quantity} = {value!r} violates bound {bound!r}"
        if t is not None:
            msg += f" at t = {t:.6g}"
        super().__init__(msg)
        self.quantity = quantity
        self.value = value
        self.bound = bound
        self.t = t


class BlowUpError(TsslabError, FloatingPointError):
    """Fields lost finiteness during time stepping."""

    def __init__(self, step, t, last_sample=None):
        super().__init__(f"non-finite field at step {step} (t = {t:.6g})")
        self.step = step
        self.t = t
        self.last_sample = last_sample
