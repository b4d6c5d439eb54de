"""Common exception types shared across the package."""


class OplexError(Exception):
    """Base class for all errors raised by this package."""


class SourceError(OplexError):
    """An error tied to a position in an input file.

    Attributes:
        file: name of the offending file (may be "<string>").
        line: 1-based line number.
        column: 1-based column number, 0 when unknown.
    """

    def __init__(self, message: str, file: str = "<string>", line: int = 0,
                 column: int = 0) -> None:
        self.file = file
        self.line = line
        self.column = column
        where = f"{file}:{line}" + (f":{column}" if column else "")
        super().__init__(f"{where}: {message}")
