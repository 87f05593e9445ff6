"""Exception hierarchy shared by all modules."""


class OscDampError(Exception):
    """Base class for every error raised by this package."""


class NonpositiveFrequency(OscDampError, ValueError):
    pass


class DuplicateFrequency(OscDampError, ValueError):
    pass


class DimensionMismatch(OscDampError, ValueError):
    pass


class DomainError(OscDampError, ValueError):
    pass


class ZeroVector(OscDampError, ValueError):
    pass


class AccuracyUnreachable(OscDampError, RuntimeError):
    pass


class BudgetExceeded(OscDampError, RuntimeError):
    pass


class ZeroAmplitude(OscDampError, ValueError):
    """Raised when a high-energy quantity is requested at the equilibrium."""


class NoConvergence(OscDampError, RuntimeError):
    pass


class DegenerateGradient(OscDampError, ValueError):
    pass


class DegenerateDirection(OscDampError, ValueError):
    pass


class SingularGauge(OscDampError, ArithmeticError):
    pass


class SizeExceeded(OscDampError, ValueError):
    pass


class NonpositiveTime(OscDampError, ValueError):
    pass


class ZeroState(OscDampError, ValueError):
    pass


class MaxTimeExceeded(OscDampError, RuntimeError):
    """The closed loop did not reach the origin in the allotted time.

    The partial trajectory is attached as ``record``.
    """

    def __init__(self, message, record=None):
        super().__init__(message)
        self.record = record


class ConfigError(OscDampError, ValueError):
    pass
