"""Error-bounded two-layer compression for gridded float32 data."""

from .api import compress, decompress
from .core import ErrorStats, error_stats
from .errors import (
    ArgumentError,
    EbccError,
    FormatError,
    IngestError,
    IoError,
    ResidualInsufficient,
    SimulationError,
    UnsupportedVersion,
)
from .pipeline import CompressedChunk, EbccParams, Mode

__version__ = "0.1.0"

__all__ = [
    "compress",
    "decompress",
    "error_stats",
    "ErrorStats",
    "EbccParams",
    "CompressedChunk",
    "Mode",
    "EbccError",
    "ArgumentError",
    "IngestError",
    "FormatError",
    "UnsupportedVersion",
    "IoError",
    "ResidualInsufficient",
    "SimulationError",
    "__version__",
]
