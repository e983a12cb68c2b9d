"""Exception taxonomy shared across the package."""

from __future__ import annotations


class EbccError(Exception):
    """Base class for all errors raised by this package."""


class ArgumentError(EbccError, ValueError):
    """A caller-supplied argument is out of its documented domain."""


class IngestError(EbccError):
    """Input data failed validation (non-finite values, bad shape)."""

    def __init__(self, message: str, index=None):
        super().__init__(message)
        self.index = index


class FormatError(EbccError):
    """A byte stream does not conform to its declared layout."""

    def __init__(self, message: str, offset: int | None = None):
        super().__init__(message)
        self.offset = offset


class UnsupportedVersion(FormatError):
    """File was written by an incompatible format version."""


class IoError(EbccError):
    """Underlying I/O operation failed."""


class ResidualInsufficient(EbccError):
    """Even the full residual stream cannot bring the error under the bound."""


class SimulationError(EbccError):
    """Particle integration produced a non-finite state."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step
