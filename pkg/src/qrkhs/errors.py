"""Exception hierarchy shared by all qrkhs modules."""


class QRKHSError(Exception):
    """Base class for every error raised by qrkhs."""


class DegenerateModulus(QRKHSError, ValueError):
    """Polar decomposition requested for the zero quaternion."""


class DimensionMismatch(QRKHSError, ValueError):
    pass


class NotHermitian(QRKHSError, ValueError):
    pass


class DomainError(QRKHSError, ValueError):
    pass


class PoleError(DomainError):
    """Gamma function evaluated at a nonpositive integer."""


class SingularAtZero(DomainError):
    pass


class SpecialOverflow(QRKHSError, OverflowError):
    pass


class IndexTooLarge(QRKHSError, ValueError):
    pass


class IndexOutOfRange(QRKHSError, IndexError):
    pass


class InsufficientSamples(QRKHSError, ValueError):
    pass


class TruncationNotConverged(QRKHSError, ArithmeticError):
    pass


class NoClosedForm(QRKHSError, ValueError):
    pass


class SliceMismatch(QRKHSError, ValueError):
    """Arguments do not share a complex slice of the quaternions."""


class NotSliceFunction(QRKHSError, ValueError):
    """A reduced (slice) quadrature rule was given a non-slice integrand."""


class BadParams(QRKHSError, ValueError):
    pass


class BadEpsilon(BadParams):
    pass


class BudgetExceeded(QRKHSError, ValueError):
    pass


class EmptyRule(QRKHSError, ValueError):
    pass


class OverlappingCells(QRKHSError, ValueError):
    pass


class PartitionError(QRKHSError, ValueError):
    pass


class IllConditionedBasis(QRKHSError, ArithmeticError):
    pass


class ConfigError(QRKHSError, ValueError):
    pass
