"""Exceptions shared across the package; the CLI maps them to exit codes."""

from __future__ import annotations


class GapJohnError(Exception):
    """Base class for all package errors."""


class PreconditionError(GapJohnError):
    """An operation was invoked outside its stated precondition."""


class GroupMismatchError(PreconditionError):
    """Operands live in different ambient groups."""


class HypothesisNotMetError(PreconditionError):
    """A theorem's hypothesis gate rejected the input."""


class CapExceededError(GapJohnError):
    """An enumeration would exceed the caller-supplied size budget."""

    def __init__(self, message: str, needed=None, cap=None):
        super().__init__(message)
        self.needed = needed
        self.cap = cap


class ParseError(GapJohnError):
    """A JSON document failed to parse or validate."""


class RetryLimitError(GapJohnError):
    """An adaptive dilation search ran out of retries."""
