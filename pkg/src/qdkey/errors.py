"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ValidationError(ValueError):
    """A value object violates one of its declared invariants."""


class ParseError(ValidationError):
    """An input file does not conform to its expected format."""
