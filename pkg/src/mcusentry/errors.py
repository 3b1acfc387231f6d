"""Exception types shared across the package."""


class McuSentryError(Exception):
    """Base class for all package errors."""


class LayoutError(McuSentryError):
    """Invalid or overlapping memory layout configuration."""


class ImageError(McuSentryError):
    """Memory image cannot be loaded as requested."""


class DecodeError(McuSentryError):
    """Word sequence does not decode to a valid instruction."""


class SizeError(McuSentryError):
    """Payload or binary exceeds the capacity of its target region."""


class FormulaError(McuSentryError):
    """Formula text cannot be parsed; carries the offending position."""

    def __init__(self, message: str, position: int | None = None):
        super().__init__(message if position is None else f"{message} (at offset {position})")
        self.position = position


class BudgetError(McuSentryError):
    """State or time budget exceeded during an exhaustive exploration."""
