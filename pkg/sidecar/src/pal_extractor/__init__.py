"""Deep global descriptors for frame directories, written as PALD files.

Standalone sidecar to the sequence matcher: it shares no code with the
matcher package and talks to it only through the descriptor interchange
format (see interchange.py for the byte layout).
"""

from .descriptor import ExtractorConfig, ExtractReport, describe_image, extract
from .interchange import write_descriptors

__version__ = "0.1.0"

__all__ = [
    "ExtractorConfig",
    "ExtractReport",
    "describe_image",
    "extract",
    "write_descriptors",
    "__version__",
]
