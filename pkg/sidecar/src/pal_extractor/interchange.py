"""Writer for the descriptor interchange format.

Layout, all little-endian: 4 bytes magic ``PALD``, u32 version (1), u32
row count, u32 dimension, count*dim float32 values row-major, then an
optional u32 length-prefixed UTF-8 source tag. Implemented here directly
so this package stays independent of the consumer.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"PALD"
VERSION = 1
_HEADER = struct.Struct("<4sIII")


def write_descriptors(
    path: str | Path, values: np.ndarray, source_tag: str = ""
) -> None:
    values = np.ascontiguousarray(values, dtype="<f4")
    if values.ndim != 2:
        raise ValueError(f"expected a 2-D descriptor array, got {values.shape}")
    count, dim = values.shape
    blob = bytearray(_HEADER.pack(MAGIC, VERSION, count, dim))
    blob += values.tobytes()
    if source_tag:
        tag = source_tag.encode("utf-8")
        blob += struct.pack("<I", len(tag))
        blob += tag
    Path(path).write_bytes(bytes(blob))
