"""Error taxonomy.

Every failure mode in the library maps to exactly one subclass below, and the
command line maps each subclass to a fixed process exit code plus a machine
readable JSON object on stderr.  Code 1 is reserved for unexpected crashes.
"""

__all__ = [
    "WidthLabError",
    "SchemaError",
    "DegenerateParameterError",
    "UnsupportedRegimeError",
    "SizeLimitError",
    "NumericError",
    "AllocationError",
    "InputDataError",
]


class WidthLabError(Exception):
    """Base class; carries a stable short name and an exit code."""

    code = 1
    name = "error"

    def payload(self) -> dict:
        return {"error": self.name, "code": self.code, "message": str(self)}


class SchemaError(WidthLabError):
    """Invalid parameter values or malformed problem/config structures."""

    code = 2
    name = "schema-violation"


class DegenerateParameterError(WidthLabError):
    """A defining denominator or scale collapses to zero."""

    code = 3
    name = "degenerate-parameters"


class UnsupportedRegimeError(WidthLabError):
    """Inputs outside the regime any implemented formula covers."""

    code = 4
    name = "unsupported-regime"


class SizeLimitError(WidthLabError):
    """A documented size cap (dimension, rank, resolution) was exceeded."""

    code = 5
    name = "size-cap"


class NumericError(WidthLabError):
    """Quadrature or optimization failed to reach its tolerance."""

    code = 6
    name = "numeric-failure"


class AllocationError(WidthLabError):
    """Rank allocation infeasible, e.g. a clamped depth went negative."""

    code = 7
    name = "allocation-infeasible"


class InputDataError(WidthLabError):
    """Unreadable or inconsistent input files (problem JSON, CSV, ensembles)."""

    code = 8
    name = "input-data"
