"""Exception hierarchy shared by all modules."""


class FracLaplaceError(Exception):
    """Base class for every error raised by the package."""


class HypothesisError(FracLaplaceError, ValueError):
    """A theorem hypothesis on (kappa, r) or the exponents does not hold.

    ``condition`` carries a short label of the violated inequality so the
    command line layer can echo it back.
    """

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class ConstraintError(HypothesisError):
    """The weighted-regime exponent relations are violated."""


class DivergenceError(FracLaplaceError, ArithmeticError):
    """A defining integral is not absolutely convergent."""


class DegenerateInputError(FracLaplaceError, ValueError):
    """Quotient requested for a function with norm 0 or infinity."""


class ToleranceError(FracLaplaceError, ArithmeticError):
    """Quadrature finished without reaching the requested tolerance."""

    def __init__(self, message, value=None, error=None):
        super().__init__(message)
        self.value = value
        self.error = error


class PreconditionError(FracLaplaceError, ValueError):
    """Malformed arguments that are not tied to a theorem hypothesis."""
