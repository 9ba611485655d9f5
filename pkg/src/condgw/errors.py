"""Exception hierarchy; the CLI maps these onto exit codes."""


class CondGWError(Exception):
    """Base class for all library errors."""


class DistributionError(CondGWError, ValueError):
    """Invalid offspring law, probability vector or parameter domain."""


class ImpossibleConditioningError(CondGWError):
    """Conditioning on an event of probability zero."""


class TreeError(CondGWError, ValueError):
    """Malformed tree, height violation or parse failure."""


class EnumerationSizeError(CondGWError):
    """Exhaustive enumeration would exceed the configured guardrail."""


class InvalidSystemError(CondGWError):
    """A type system whose sets do not partition the counting vectors."""


class ImpossibleSearchError(CondGWError):
    """Search cost undefined because no tree reaches the target level."""


class NonTerminationError(CondGWError):
    """The search simulator hit its restart cap."""
