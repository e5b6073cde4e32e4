"""Error hierarchy shared by the library, CLI and service.

Each class maps to one CLI exit code so batch failures are scriptable.
"""


class RobotabilityError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class ValidationError(RobotabilityError):
    """Invalid inputs: bad ids, malformed files, broken invariants."""

    exit_code = 2


class DataError(RobotabilityError):
    """Missing or unusable data during extraction or loading."""

    exit_code = 3


class NumericalError(RobotabilityError):
    """Numerical failure, e.g. eigen iteration that does not converge."""

    exit_code = 4


class AggregationError(RobotabilityError):
    """Aggregation over an empty or fully-masked score field."""

    exit_code = 3
