from __future__ import annotations

import struct

import numpy as np
import pytest

from paloc.descriptors import DescriptorSet
from paloc.interchange import (
    MAGIC,
    VERSION,
    BadMagicError,
    InconsistentSizeError,
    InterchangeError,
    TruncatedFileError,
    read_descriptors,
    write_descriptors,
)


def _random_set(seed, count=10, dim=32, tag=""):
    rng = np.random.default_rng(seed)
    values = rng.normal(size=(count, dim)).astype(np.float32)
    return DescriptorSet(values, source_tag=tag)


def test_roundtrip_bit_exact(tmp_path):
    descs = _random_set(0, count=17, dim=48)
    path = tmp_path / "d.pald"
    write_descriptors(path, descs)
    back = read_descriptors(path)
    assert back.values.dtype == np.float32
    assert np.array_equal(
        back.values.view(np.uint32), descs.values.view(np.uint32)
    )
    assert back.source_tag == ""


def test_roundtrip_with_source_tag(tmp_path):
    descs = _random_set(1, tag="deep-net v2 / café")
    path = tmp_path / "d.pald"
    write_descriptors(path, descs)
    back = read_descriptors(path)
    assert back.source_tag == "deep-net v2 / café"
    assert np.array_equal(back.values, descs.values)


def test_header_layout_is_little_endian(tmp_path):
    descs = DescriptorSet(np.zeros((3, 5), dtype=np.float32))
    path = tmp_path / "d.pald"
    write_descriptors(path, descs)
    raw = path.read_bytes()
    assert raw[:4] == MAGIC
    version, count, dim = struct.unpack_from("<III", raw, 4)
    assert (version, count, dim) == (VERSION, 3, 5)
    assert len(raw) == 16 + 3 * 5 * 4


def test_empty_set_roundtrip(tmp_path):
    descs = DescriptorSet(np.zeros((0, 8), dtype=np.float32))
    path = tmp_path / "d.pald"
    write_descriptors(path, descs)
    back = read_descriptors(path)
    assert back.values.shape == (0, 8)


def test_bad_magic(tmp_path):
    path = tmp_path / "d.pald"
    path.write_bytes(b"NOPE" + b"\x00" * 12)
    with pytest.raises(BadMagicError):
        read_descriptors(path)


def test_bad_magic_on_tiny_file(tmp_path):
    path = tmp_path / "d.pald"
    path.write_bytes(b"NO")
    with pytest.raises(BadMagicError):
        read_descriptors(path)


def test_truncated_header(tmp_path):
    path = tmp_path / "d.pald"
    path.write_bytes(MAGIC + b"\x01\x00")
    with pytest.raises(TruncatedFileError):
        read_descriptors(path)


def test_truncated_payload(tmp_path):
    # header declares 10 rows but the payload holds 9
    dim = 4
    header = struct.pack("<4sIII", MAGIC, VERSION, 10, dim)
    payload = np.ones((9, dim), dtype="<f4").tobytes()
    path = tmp_path / "d.pald"
    path.write_bytes(header + payload)
    with pytest.raises(TruncatedFileError):
        read_descriptors(path)


def test_unsupported_version(tmp_path):
    header = struct.pack("<4sIII", MAGIC, 9, 1, 1)
    path = tmp_path / "d.pald"
    path.write_bytes(header + b"\x00" * 4)
    with pytest.raises(InterchangeError):
        read_descriptors(path)


def test_inconsistent_tag_length(tmp_path):
    descs = _random_set(2, count=2, dim=3, tag="sad")
    path = tmp_path / "d.pald"
    write_descriptors(path, descs)
    raw = bytearray(path.read_bytes())
    # corrupt the declared tag length
    tag_len_offset = 16 + 2 * 3 * 4
    raw[tag_len_offset:tag_len_offset + 4] = struct.pack("<I", 99)
    path.write_bytes(bytes(raw))
    with pytest.raises(InconsistentSizeError):
        read_descriptors(path)


def test_truncated_tag_length_field(tmp_path):
    descs = _random_set(3, count=2, dim=3)
    path = tmp_path / "d.pald"
    write_descriptors(path, descs)
    path.write_bytes(path.read_bytes() + b"\x05\x00")
    with pytest.raises(TruncatedFileError):
        read_descriptors(path)
