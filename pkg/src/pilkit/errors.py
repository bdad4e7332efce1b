"""Exception hierarchy shared by every pilkit module."""


class PilError(Exception):
    """Base class for all pilkit errors."""


class InvalidMatrix(PilError, ValueError):
    """Matrix is not 2-D, is empty, or holds NaN/Inf."""


class ShapeMismatch(PilError, ValueError):
    """Operand shapes are incompatible."""


class DomainError(PilError, ValueError):
    """Value outside the domain of an inverse activation."""


class ConfigError(PilError, ValueError):
    """Invalid training, diagnostic or CLI configuration."""


class NumericalError(PilError, ArithmeticError):
    """A non-finite intermediate appeared during training."""


class DatasetError(PilError):
    """Base class for data loading and encoding failures."""


class DataIOError(DatasetError, OSError):
    """Dataset file is missing or unreadable."""


class ParseError(DatasetError, ValueError):
    """A designated cell could not be parsed.

    ``row`` is the 1-based line number in the file, ``col`` the 0-based column.
    """

    def __init__(self, message: str, row: int, col: int):
        super().__init__(f"{message} (row {row}, column {col})")
        self.row = row
        self.col = col


class EmptyDataset(DatasetError, ValueError):
    """Dataset contains no data rows."""


class UnknownClass(DatasetError, KeyError):
    """Label is not among the encoding's class labels."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else ""


class FormatError(PilError, ValueError):
    """Corrupt or incompatible serialized model.

    ``offset`` is the byte offset at which decoding failed.
    """

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset
