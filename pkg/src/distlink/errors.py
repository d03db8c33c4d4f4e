"""Exception hierarchy for the distlink package."""


class DistlinkError(Exception):
    """Base class for all package errors."""


class InputFormatError(DistlinkError):
    """Malformed or inconsistent input data (CSV/JSON parsing, shape or
    invariant violations of user-supplied tables and matrices)."""


class SizeLimitError(DistlinkError):
    """An operation restricted to small instances was called on a larger one
    (brute-force oracles, exhaustive witness enumeration)."""


class ResourceBudgetError(DistlinkError):
    """A search exceeded its configured node budget.  Signals "instance too
    hard", never a wrong answer."""


class DegenerateSampleError(DistlinkError):
    """A statistic is undefined on the given sample (zero variance,
    collapsed quantile band)."""
