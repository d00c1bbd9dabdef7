"""Exception taxonomy; the CLI maps these onto exit codes."""


class NpcharmError(Exception):
    """Base class for library errors."""


class UsageError(NpcharmError, ValueError):
    """Bad arguments: mismatched space tags, out-of-range parameters,
    malformed input files.  CLI exit code 1."""


class DomainError(NpcharmError, ValueError):
    """Mathematically invalid payload: non-positive-definite matrix,
    singular group element, point outside the model."""


class ConvergenceError(NpcharmError):
    """Iteration failed to meet tolerance.  Carries the best iterate and
    diagnostics.  CLI exit code 2."""

    def __init__(self, message, best=None, displacement=None, trace=None):
        super().__init__(message)
        self.best = best
        self.displacement = displacement
        self.trace = trace


class InvariantViolation(NpcharmError):
    """A verification suite detected a violated invariant.  CLI exit 3."""
