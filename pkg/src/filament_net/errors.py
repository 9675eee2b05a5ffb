"""Exception types raised by the package.

The CLI maps each family onto an exit code, so library code raises the most
specific class available instead of a bare ``ValueError``.
"""

from __future__ import annotations


class FilamentError(Exception):
    """Base class for all package errors."""


class FormatError(FilamentError, ValueError):
    """A Netpbm file could not be decoded.

    ``offset`` is the byte position in the file at which decoding failed.
    """

    def __init__(self, message: str, offset: int | None = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)


class ShapeError(FilamentError, ValueError):
    """Array dimensions are inconsistent with each other or with the window."""


class DegenerateTrainingSet(FilamentError, ValueError):
    """The labelled interior holds only one class."""


class NumericalError(FilamentError, ArithmeticError):
    """A linear solve or fit failed numerically."""
