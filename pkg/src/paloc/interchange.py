"""Binary descriptor interchange format.

Layout, all little-endian:

    bytes 0..3   magic ``PALD``
    u32          version (currently 1)
    u32          count (rows)
    u32          dim (columns)
    count*dim    float32 payload, row-major
    [u32 + utf8] optional source tag, length-prefixed

The float payload round-trips bit-exactly. External descriptor producers
only need to emit this layout to feed the matcher; see README for the
one-paragraph summary aimed at them.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .descriptors import DescriptorSet

MAGIC = b"PALD"
VERSION = 1
_HEADER = struct.Struct("<4sIII")


class InterchangeError(ValueError):
    """Base class for descriptor file problems."""


class BadMagicError(InterchangeError):
    """File does not start with the PALD magic (wrong file type)."""


class TruncatedFileError(InterchangeError):
    """File ends before the declared payload does."""


class InconsistentSizeError(InterchangeError):
    """Declared count*dim disagrees with the bytes actually present."""


def write_descriptors(path: str | Path, descs: DescriptorSet) -> None:
    """Serialize a descriptor set; floats are written bit-exactly."""
    values = np.ascontiguousarray(descs.values, dtype="<f4")
    count, dim = values.shape
    blob = bytearray(_HEADER.pack(MAGIC, VERSION, count, dim))
    blob += values.tobytes()
    if descs.source_tag:
        tag = descs.source_tag.encode("utf-8")
        blob += struct.pack("<I", len(tag))
        blob += tag
    Path(path).write_bytes(bytes(blob))


def read_descriptors(path: str | Path) -> DescriptorSet:
    """Parse a descriptor file, validating structure before trusting sizes."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        if raw[:4] != MAGIC:
            raise BadMagicError(f"{path}: not a descriptor file (bad magic)")
        raise TruncatedFileError(f"{path}: header cut short at {len(raw)} bytes")
    magic, version, count, dim = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise BadMagicError(f"{path}: not a descriptor file (bad magic {magic!r})")
    if version != VERSION:
        raise InterchangeError(f"{path}: unsupported version {version}")
    payload_bytes = count * dim * 4
    body = raw[_HEADER.size:]
    if len(body) < payload_bytes:
        raise TruncatedFileError(
            f"{path}: payload needs {payload_bytes} bytes, found {len(body)}"
        )
    values = np.frombuffer(body[:payload_bytes], dtype="<f4")
    if values.size != count * dim:
        raise InconsistentSizeError(
            f"{path}: expected {count}x{dim} values, parsed {values.size}"
        )
    tail = body[payload_bytes:]
    source_tag = ""
    if tail:
        if len(tail) < 4:
            raise TruncatedFileError(f"{path}: source tag length cut short")
        (tag_len,) = struct.unpack_from("<I", tail)
        if len(tail) - 4 != tag_len:
            raise InconsistentSizeError(
                f"{path}: source tag declares {tag_len} bytes, found {len(tail) - 4}"
            )
        source_tag = tail[4:].decode("utf-8")
    if count == 0:
        values = values.reshape(0, dim)
    else:
        values = values.reshape(count, dim)
    return DescriptorSet(values=values.copy(), source_tag=source_tag)
