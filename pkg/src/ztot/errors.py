"""Exception taxonomy.

Every class maps to a CLI exit code: parse -> 1, validation/feasibility/
invariant/argument -> 2, non-convergence -> 3, capacity -> 4.
"""


class ZtotError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(ZtotError):
    """Problem file is malformed; carries field/context information."""

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        super().__init__(message if field is None else f"{field}: {message}")


class ValidationError(ZtotError):
    """A construction invariant (marginal, metric, plan, ...) failed."""


class DimensionError(ValidationError):
    """Table shapes do not agree."""


class ArgumentError(ZtotError):
    """An operation received an out-of-domain argument."""


class FeasibilityError(ZtotError):
    """A plan or dual pair required to be feasible is not."""


class InvariantError(ZtotError):
    """A mathematical invariant that should hold was violated numerically."""


class ConvergenceError(ZtotError):
    """Iteration cap reached before the residual target."""

    def __init__(self, message: str, residual: float, iterations: int,
                 beta: float | None = None):
        self.residual = residual
        self.iterations = iterations
        self.beta = beta
        super().__init__(message)


class CapacityError(ZtotError):
    """Instance exceeds a deliberate desk-scale cap."""
