"""Exception hierarchy shared by every module."""


class HellyError(Exception):
    """Base class for all errors raised by this package."""


class SchemaError(HellyError, ValueError):
    """Instance or report JSON does not match the expected layout."""


class EmptyInterior(HellyError):
    """No strictly feasible point exists."""


class Unbounded(HellyError):
    """The intersection has a recession direction."""


class SingularMatrix(HellyError, ArithmeticError):
    pass


class NoConvergence(HellyError):
    """Iteration budget exhausted.

    ``best`` holds the last iterate and ``residual`` its residual, so callers
    can still inspect the partial result.
    """

    def __init__(self, message, best=None, residual=None):
        super().__init__(message)
        self.best = best
        self.residual = residual


class ContactDeficit(HellyError):
    pass


class ResidualTooLarge(HellyError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class InvalidDecomposition(HellyError):
    pass


class BarrierStall(HellyError):
    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class NotDominatingIdentity(HellyError):
    pass


class NotInHull(HellyError):
    pass


class OriginNotInterior(HellyError):
    pass


class BudgetExceeded(HellyError):
    pass


class InternalCheckFailed(HellyError):
    """A theorem-backed invariant failed; always a pipeline bug."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class MismatchedInstance(HellyError):
    pass
