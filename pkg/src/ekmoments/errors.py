"""Exception hierarchy shared by all modules.

CLI exit code mapping: usage errors exit 2 (argparse), RangeGuardError and
DomainError exit 3, ResourceCapError (incl. UnreachablePrecisionError) exit 4.
"""


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation (e.g. Gamma at z <= 0)."""


class RangeGuardError(ValueError):
    """Parameters outside the validity range of an asymptotic formula; we raise rather than extrapolate."""


class ResourceCapError(RuntimeError):
    """Request exceeds a configured resource cap (sieve size, node count, ...)."""


class UnreachablePrecisionError(ResourceCapError):
    """Requested precision would need resources beyond the configured cap."""


class NonConvergenceError(RuntimeError):
    """An iterative scheme failed to reach its tolerance within its budget."""


class PrecisionFailure(RuntimeError):
    """A computed error estimate exceeds the tolerance the caller asked for."""
