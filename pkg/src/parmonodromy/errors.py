"""Exception hierarchy shared by all modules."""


class MonodromyError(Exception):
    """Base class for every error raised by this package."""


# parameter algebra
class PoleAtParameter(MonodromyError, ZeroDivisionError):
    pass


class DivisionByZeroFunction(MonodromyError, ZeroDivisionError):
    pass


# series
class CenterMismatch(MonodromyError, ValueError):
    pass


class SingularLeadingCoefficient(MonodromyError, ArithmeticError):
    pass


class InsufficientTruncation(MonodromyError, ValueError):
    pass


# systems
class InvalidSystem(MonodromyError, ValueError):
    pass


class PoleCollision(InvalidSystem):
    """Two pole locations coincide (as functions of t, or at a sample)."""


class PoleCollisionAtParameter(PoleCollision):
    pass


class SingularGauge(MonodromyError, ArithmeticError):
    pass


class SampleAtSingularity(MonodromyError, ValueError):
    pass


# normal form
class ResonantEigenvalues(MonodromyError, ArithmeticError):
    """Two eigenvalues of the leading matrix differ by the integer ``order``."""

    def __init__(self, order, message=None):
        self.order = order
        super().__init__(message or f"eigenvalues of A0 differ by {order}")


class EigenvalueClusterAmbiguity(MonodromyError, ArithmeticError):
    pass


class InvalidLocalSystem(MonodromyError, ValueError):
    pass


class EvaluationFailure(MonodromyError, RuntimeError):
    pass


# continuation
class PathTooCloseToPole(MonodromyError, ValueError):
    pass


class StepSizeUnderflow(MonodromyError, RuntimeError):
    pass


# Riemann-Hilbert
class SingularMatrix(MonodromyError, ArithmeticError):
    pass


class BranchAmbiguity(MonodromyError, ArithmeticError):
    def __init__(self, message, location=None):
        self.location = location
        super().__init__(message if location is None else f"{message} (at {location})")


class InvalidTarget(MonodromyError, ValueError):
    pass


class MaxIterationsExceeded(MonodromyError, RuntimeError):
    """Raised when some grid point did not reach the fit tolerance.

    ``solution`` holds the partial :class:`RHSolution`, ``best_residual`` the
    worst best-residual over the failed grid points.
    """

    def __init__(self, message, solution=None, best_residual=None):
        self.solution = solution
        self.best_residual = best_residual
        super().__init__(message)


# rationality
class InconsistentSamples(MonodromyError, RuntimeError):
    pass
