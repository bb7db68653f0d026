"""Exception types shared across the package."""


class MarkovLabError(Exception):
    """Base class for all package errors."""


class ValidationError(MarkovLabError):
    """Input violates a documented precondition or invariant."""


class DegeneracyError(ValidationError):
    """A space has an atom with zero marginal mass."""


class ParseError(MarkovLabError):
    """Malformed input document (edge list, space JSON, config)."""


class BudgetError(MarkovLabError):
    """A resource budget (table size, edge count, atom count) was exceeded."""
