"""Exception hierarchy shared by all modules."""


class KSError(Exception):
    """Base class for every error raised by ksmms."""


class NonMetric(KSError, ValueError):
    """A distance table violates symmetry, positivity or the triangle inequality.

    ``triple`` holds the offending point ids ``(x, y, z)`` for triangle
    failures (``d(x, z) > d(x, y) + d(y, z)``) and ``(x, y)`` otherwise.
    """

    def __init__(self, message, triple=()):
        super().__init__(message)
        self.triple = tuple(triple)


class NegativeMass(KSError, ValueError):
    pass


class EmptySpace(KSError, ValueError):
    pass


class BadRadiusGrid(KSError, ValueError):
    pass


class IndexOutOfRange(KSError, IndexError):
    pass


class BadExponent(KSError, ValueError):
    pass


class SolverFailure(KSError, RuntimeError):
    """The semi-norm solver hit its iteration cap before converging.

    The best feasible result found so far is attached as ``best``.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class TooLarge(KSError, ValueError):
    pass


class ZeroTotalMass(KSError, ValueError):
    pass


class MissingFullBall(KSError, ValueError):
    pass


class GridTooSmall(KSError, ValueError):
    pass


class NoValidBall(KSError, ValueError):
    pass


class NegativeInput(KSError, ValueError):
    pass


class SizeCap(KSError, ValueError):
    pass


class BadExpression(KSError, ValueError):
    pass


class IoFailure(KSError, OSError):
    pass
