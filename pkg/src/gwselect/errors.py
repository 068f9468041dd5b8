"""Exception types shared across the toolkit.

Everything derives from :class:`GwSelectError`, which itself derives from
``ValueError`` so casual callers can catch one thing.
"""


class GwSelectError(ValueError):
    """Base class for all toolkit errors."""


class FormatError(GwSelectError):
    """File bytes do not match the declared on-disk format."""


class ValidationError(GwSelectError):
    """A value violates a documented invariant (bad row, NaN, duplicate id...)."""


class PairingError(GwSelectError):
    """Two embedding sets that must share ids do not."""


class ShapeError(GwSelectError):
    """Array dimensions are incompatible."""


class DegenerateError(GwSelectError):
    """Input is mathematically degenerate (zero-norm vector, zero median, constant data)."""


class ParameterError(GwSelectError):
    """A parameter is out of its allowed range."""


class AlignmentError(GwSelectError):
    """Named score vectors cannot be aligned by key."""


class PoolError(GwSelectError):
    """A pool manifest entry cannot be scored."""
