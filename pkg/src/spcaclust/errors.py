"""Exception hierarchy.

Validation problems derive from :class:`ValueError`; numerical breakdowns
inside the clustering pipeline derive from :class:`PipelineError` so callers
can count them per replicate without catching unrelated bugs.
"""

from __future__ import annotations


class SpcaClustError(Exception):
    """Base class for every error raised by this package."""


class InvalidData(SpcaClustError, ValueError):
    pass


class InvalidArgument(SpcaClustError, ValueError):
    pass


class InvalidConfig(SpcaClustError, ValueError):
    pass


class CsvParseError(SpcaClustError, ValueError):
    """Raised by the CSV loader; ``row`` and ``column`` are 1-based."""

    def __init__(self, message: str, row: int | None = None, column: int | None = None):
        self.row = row
        self.column = column
        if row is not None and column is not None:
            message = f"{message} (row {row}, column {column})"
        elif row is not None:
            message = f"{message} (row {row})"
        super().__init__(message)


class InvalidCovariance(SpcaClustError, ValueError):
    pass


class PipelineError(SpcaClustError, ArithmeticError):
    """A rank or selection breakdown while running a clustering method."""


class DegenerateSignal(PipelineError):
    pass


class InitFailure(PipelineError):
    pass


class InitRankDeficient(PipelineError):
    pass


class RankDeficientSelection(PipelineError):
    pass


class RankDeficientProjection(PipelineError):
    pass
