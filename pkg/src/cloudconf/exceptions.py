"""Exception hierarchy shared by every module of the package."""


class CloudConfError(Exception):
    """Base class for all errors raised by cloudconf."""


class ValidationError(CloudConfError, ValueError):
    """Input violates a documented precondition or invariant."""


class ParseError(ValidationError):
    """A data file row could not be parsed."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DuplicateKeyError(ValidationError):
    pass


class UnknownKeyError(CloudConfError, KeyError):
    """Lookup of a workload, VM or configuration that is not present."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class OutOfBoundsError(CloudConfError, IndexError):
    pass


class ModeUnavailableError(CloudConfError):
    """Full-run observation requested but the backend has no full runtime."""


class NumericError(CloudConfError, ArithmeticError):
    pass


class ExhaustedSpaceError(CloudConfError):
    """No unobserved, not-known-infeasible configuration is left."""


class NoSolutionError(CloudConfError):
    """A search finished without a single feasible observation."""

    def __init__(self, message, accumulated_charge_usd=0.0):
        self.accumulated_charge_usd = accumulated_charge_usd
        super().__init__(f"{message} (accumulated charge {accumulated_charge_usd:.6g} USD)")
