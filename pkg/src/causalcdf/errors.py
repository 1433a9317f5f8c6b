"""Exception hierarchy shared across the package."""


class CausalCdfError(Exception):
    """Base class for all errors raised by this package."""


class SchemaError(CausalCdfError):
    """A required column is missing from an input file."""


class ValidationError(CausalCdfError):
    """An input value violates a documented precondition or invariant."""


class EmptyDataError(CausalCdfError):
    """No usable rows remain after ingestion."""


class DegenerateDesignError(CausalCdfError):
    """The design matrix cannot support the requested fit."""


class DegenerateDensityError(CausalCdfError):
    """A density estimate is unusable (zero spread or vanishing value)."""


class InvariantError(CausalCdfError):
    """An internal numerical invariant was violated during a fit."""


class RunError(CausalCdfError):
    """Too many replicate-level failures in a simulation or bootstrap run."""
