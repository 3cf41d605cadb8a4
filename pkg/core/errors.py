"""
Exception hierarchy shared by the library and the command-line driver
"""
from typing import Optional


class SeirdvError(Exception):
    """Base class for all errors raised by this package"""

    exit_code = 1


class ConfigError(SeirdvError, ValueError):
    """Invalid run configuration or schedule"""

    exit_code = 2


class DataError(SeirdvError, ValueError):
    """Input data could not be read or is inconsistent"""

    exit_code = 3


class RegionNotFoundError(DataError):
    """Requested region has no row in the time-series file"""

    def __init__(self, region: str):
        super().__init__(f"region not found: {region!r}")
        self.region = region


class ParseError(DataError):
    """Malformed cell or header, with its location in the source file"""

    def __init__(self, message: str, row: Optional[int] = None, column: Optional[str] = None):
        location = []
        if row is not None:
            location.append(f"row {row}")
        if column is not None:
            location.append(f"column {column!r}")
        if location:
            message = f"{message} ({', '.join(location)})"
        super().__init__(message)
        self.row = row
        self.column = column


class IntegrationError(SeirdvError, ArithmeticError):
    """ODE integration produced a non-finite or negative state"""

    exit_code = 4

    def __init__(self, message: str, day: Optional[int] = None, params=None):
        if day is not None:
            message = f"{message} at day {day}"
        if params is not None:
            message = f"{message}; parameters: {params.describe()}"
        super().__init__(message)
        self.day = day
        self.params = params


class SamplerError(SeirdvError, RuntimeError):
    """MCMC sampling cannot start or continue"""

    exit_code = 4
