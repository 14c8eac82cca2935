"""Exception hierarchy shared by all modules."""


class BayesRoughError(Exception):
    """Base class for every error raised by this package."""


class SchemaError(BayesRoughError):
    """A column, attribute or predicate does not match the schema."""


class ParseError(BayesRoughError):
    """A cell or file could not be parsed.

    ``row`` is the 1-based data row (header excluded) and ``column`` the
    column name, when known.
    """

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class DomainError(BayesRoughError, ValueError):
    """An argument lies outside the domain of the operation."""

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class ConfigError(BayesRoughError, ValueError):
    """Invalid configuration, detected before any work starts."""


class ProposalError(BayesRoughError):
    """A proposal kernel could not produce a valid state."""


class ChainError(BayesRoughError):
    """The sampler could not complete the requested chain."""
