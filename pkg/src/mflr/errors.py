"""Exception hierarchy.

Every error raised on purpose by the library derives from :class:`MflrError`.
The CLI maps the three families below onto exit codes 2, 3 and 4.
"""


class MflrError(Exception):
    """Base class for library errors."""

    exit_code = 3


class ConfigError(MflrError):
    exit_code = 2


class NumericalError(MflrError):
    exit_code = 3


class DataError(MflrError):
    exit_code = 4


# linalg / shape problems
class DimensionMismatch(NumericalError, ValueError):
    pass


class NotPositiveDefinite(NumericalError):
    pass


class InsufficientSamples(NumericalError):
    pass


class EmptyInput(NumericalError, ValueError):
    pass


class UnsupportedDistribution(NumericalError, ValueError):
    pass


# statistics / coefficients
class DegenerateStats(NumericalError):
    pass


class MissingMatrixStats(NumericalError):
    pass


class MissingFidelity(DataError):
    pass


# allocation
class BudgetTooSmall(NumericalError):
    pass


class InvalidCorrelationOrdering(NumericalError):
    pass


class NonMonotoneAllocation(NumericalError):
    pass


class ZeroHighFidelity(NumericalError):
    pass


# estimators
class EmptyData(NumericalError):
    pass


class NonNestedData(NumericalError):
    pass


class CountMismatch(NumericalError):
    pass


# models
class SolverDivergence(NumericalError):
    def __init__(self, message, z=None):
        super().__init__(message)
        self.z = z


# datasets
class FormatError(DataError):
    pass


class InsufficientRows(DataError):
    pass
