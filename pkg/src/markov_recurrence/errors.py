"""Exception types raised by the analysis routines."""


class RecurrenceError(Exception):
    """Base class for all errors raised by this package."""


class NonStochasticRow(RecurrenceError, ValueError):
    def __init__(self, row, total):
        self.row = row
        self.total = total
        super().__init__(f"row {row} sums to {total!r}, expected 1")


class NegativeEntry(RecurrenceError, ValueError):
    def __init__(self, row, col, value=None):
        self.row = row
        self.col = col
        self.value = value
        super().__init__(f"entry ({row}, {col}) is negative: {value!r}")


class DimensionMismatch(RecurrenceError, ValueError):
    pass


class InvalidGamma(RecurrenceError, ValueError):
    pass


class InvalidGenerator(RecurrenceError, ValueError):
    pass


class EmptySet(RecurrenceError, ValueError):
    """The set has zero reference mass, so the criterion does not apply."""


class FamilyTooLarge(RecurrenceError, ValueError):
    pass


class InvalidPartition(RecurrenceError, ValueError):
    pass


class InhomogeneousChain(RecurrenceError, ValueError):
    """An analysis that needs a time-homogeneous chain got a schedule."""


class ParseError(RecurrenceError, ValueError):
    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        where = []
        if field is not None:
            where.append(f"field {field!r}")
        if line is not None:
            where.append(f"line {line}")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)


class SupportUnderflowWarning(RuntimeWarning):
    """A structurally positive transition fell below the numeric cutoff."""
