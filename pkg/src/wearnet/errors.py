"""Exception hierarchy.

Every error raised on bad data derives from :class:`DataError` so callers
(and the CLI) can tell data problems apart from programming mistakes.
"""


class WearnetError(Exception):
    pass


class DataError(WearnetError, ValueError):
    """Input data is malformed or cannot be processed."""


class ParseError(DataError):
    def __init__(self, message, line=None, filename=None):
        self.line = line
        self.filename = filename
        where = []
        if filename is not None:
            where.append(str(filename))
        if line is not None:
            where.append(f"line {line}")
        prefix = ":".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class StructureError(DataError):
    pass


class FormatError(DataError):
    pass


class ChannelRangeError(DataError, IndexError):
    pass


class DegenerateStatisticsError(DataError):
    pass


class DomainError(DataError):
    pass


class CapacityError(DataError):
    pass


class ShapeError(DataError):
    pass


class BalanceError(DataError):
    pass


class SplitError(DataError):
    pass


class DivergenceError(WearnetError, ArithmeticError):
    def __init__(self, message, step=None, run=None):
        self.step = step
        self.run = run
        super().__init__(message)
