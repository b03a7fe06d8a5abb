"""Exception hierarchy shared across the library and the CLI."""


class GmtError(Exception):
    """Base class for all errors raised by this package."""


class DataFormatError(GmtError):
    """Input data could not be parsed or violates its declared schema."""


class SchemaMismatchError(GmtError):
    """A model and the data it is applied to disagree on schema or shape."""
