"""Exception hierarchy shared by the library and the command line front end.

The command line maps these onto exit codes: ConfigError -> 2,
DataError -> 3, NumericError -> 4.
"""

from __future__ import annotations


class InciteError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(InciteError):
    """The run configuration is missing, malformed, or inconsistent."""


class DataError(InciteError):
    """An input stream or artifact is unreadable or violates its schema."""


class NumericError(InciteError):
    """A numeric routine failed in a way that invalidates the result."""


class DegenerateStatisticWarning(UserWarning):
    """A statistic hit a guarded degenerate case (for example p_e = 1)."""
