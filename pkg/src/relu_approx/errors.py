"""Exception types shared across the package.

The CLI and the HTTP service map these onto exit codes / status codes:
parameter and domain problems are "caller error" (exit 2), a measured
guarantee violation is exit 3, I/O trouble is exit 4.
"""


class ParameterError(ValueError):
    """A precondition on operation parameters is violated."""


class DomainMismatchError(ParameterError):
    """Two piecewise-linear functions do not share the same interval."""


class RangeError(ParameterError):
    """A composition feeds values outside the outer function's interval."""


class StructureError(ValueError):
    """A network violates a structural invariant (bad edge, bad output layer)."""


class UnsupportedActivationError(ValueError):
    """The requested operation cannot handle this activation kind."""


class GuaranteeViolation(RuntimeError):
    """A measured error exceeded the bound the construction promises."""
