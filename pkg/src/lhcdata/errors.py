"""Exception hierarchy shared by all lhcdata modules."""


class LhcDataError(Exception):
    """Base class for every error raised by this package."""


class DomainError(LhcDataError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class NonPhysical(LhcDataError, ValueError):
    """A four-vector has a Minkowski norm squared below the numerical slack."""


class InvalidEvent(LhcDataError, ValueError):
    """An event violates a structural invariant of the event record."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class SchemaError(LhcDataError, ValueError):
    """A table does not match the event-record schema.

    ``column`` names the first offending column.
    """

    def __init__(self, column, reason=""):
        self.column = column
        self.reason = reason
        super().__init__(column if not reason else f"{column}: {reason}")


class UnsupportedCombination(LhcDataError, ValueError):
    """The (format, compression) pair is not in the support matrix."""


class IoError(LhcDataError, OSError):
    """Reading or writing a file failed at the operating-system level."""


class FormatError(LhcDataError, ValueError):
    """A file is corrupt or not in the expected format."""

    def __init__(self, message, offset=None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)


class ParseError(FormatError):
    """A JSON-lines record could not be ingested."""

    def __init__(self, message, line, column=None, offset=None):
        self.line = line
        self.column = column
        where = f"line {line}" + (f", column {column}" if column else "")
        FormatError.__init__(self, f"{where}: {message}", offset)


class UnknownQuantity(LhcDataError, KeyError):
    """A selection or histogram refers to a quantity id not in the registry."""

    def __str__(self):
        return f"unknown quantity {self.args[0]!r}"


class BadEdges(LhcDataError, ValueError):
    """Histogram edges are not strictly ascending or too few."""


class EmptyHistogram(LhcDataError, ValueError):
    """A histogram with no in-range weight cannot be normalized."""


class BinningMismatch(LhcDataError, ValueError):
    """Histograms being combined do not share identical edges."""
