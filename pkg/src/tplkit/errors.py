"""Exception hierarchy for tplkit.

Every error raised by the library derives from :class:`TplError`, so callers
can catch the whole family at once. The CLI maps each subclass family to its
own exit code.
"""


class TplError(Exception):
    """Base class for all tplkit errors."""


class InputError(TplError, ValueError):
    """Malformed or invalid input data."""


class MalformedInput(InputError):
    pass


class NotStochastic(InputError):
    pass


class NegativeEntry(InputError):
    pass


class InvalidDimension(InputError):
    pass


class DomainError(TplError, ValueError):
    """A numeric argument lies outside the operation's domain."""


class NonPositiveS(DomainError):
    pass


class NegativeAlpha(DomainError):
    pass


class NonPositiveEpsilon(DomainError):
    pass


class NonPositiveSensitivity(DomainError):
    pass


class DimensionMismatch(DomainError):
    pass


class LengthMismatch(DomainError):
    pass


class IndexOutOfRange(DomainError, IndexError):
    pass


class InvalidDomain(DomainError):
    pass


class OutOfDomain(DomainError):
    """Raised when a piecewise loss is evaluated beyond its generation cap.

    The caller should regenerate the loss function with a larger ``a_max``.
    """

    def __init__(self, alpha, a_max):
        super().__init__(f"alpha={alpha!r} exceeds loss-function cap a_max={a_max!r}")
        self.alpha = alpha
        self.a_max = a_max


class TooLarge(DomainError):
    pass


class ComputationError(TplError, RuntimeError):
    """A numeric procedure could not produce a result."""


class IntersectionTooDense(ComputationError):
    pass


class Unachievable(ComputationError):
    pass


class NoConvergence(ComputationError):
    pass


class InfeasibleMid(ComputationError):
    pass
