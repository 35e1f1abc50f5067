"""Unit tests: config, splitting, writer layout, extraction behavior."""

import struct

import cv2
import numpy as np
import pytest

from pal_extractor.backbone import load_backbone
from pal_extractor.descriptor import (
    ExtractorConfig,
    _split_columns,
    describe_image,
    extract,
)
from pal_extractor.frames import list_frames, load_rgb
from pal_extractor.interchange import write_descriptors

BACKBONE = "resnet18:random"  # fixed-seed init, no weight fetch


def _config(tmp_path, **overrides):
    kwargs = {
        "input_dir": tmp_path / "frames",
        "output_file": tmp_path / "out.pald",
        "parts": 2,
        "input_size": 64,
        "backbone": BACKBONE,
    }
    kwargs.update(overrides)
    return ExtractorConfig(**kwargs)


def _write_frames(tmp_path, n, seed=0, size=(60, 200)):
    frame_dir = tmp_path / "frames"
    frame_dir.mkdir(exist_ok=True)
    rng = np.random.default_rng(seed)
    paths = []
    for t in range(n):
        img = rng.integers(0, 256, size=(*size, 3), dtype=np.uint8)
        path = frame_dir / f"frame_{t:03d}.png"
        cv2.imwrite(str(path), img)
        paths.append(path)
    return frame_dir, paths


def _parse_pald(raw):
    magic, version, count, dim = struct.unpack_from("<4sIII", raw)
    assert magic == b"PALD" and version == 1
    payload = count * dim * 4
    values = np.frombuffer(raw[16:16 + payload], dtype="<f4").reshape(count, dim)
    tag = ""
    tail = raw[16 + payload:]
    if tail:
        (tag_len,) = struct.unpack_from("<I", tail)
        assert len(tail) - 4 == tag_len
        tag = tail[4:].decode("utf-8")
    return values, tag


def test_config_validation(tmp_path):
    with pytest.raises(ValueError, match="parts must be 1, 2 or 4"):
        _config(tmp_path, parts=3)
    with pytest.raises(ValueError, match="input_size must be > 0"):
        _config(tmp_path, input_size=0)
    with pytest.raises(ValueError, match="unknown aggregation"):
        _config(tmp_path, aggregation="avg")


def test_backbone_validation():
    with pytest.raises(ValueError, match="unknown backbone"):
        load_backbone("alexnet")
    with pytest.raises(ValueError, match="unknown backbone variant"):
        load_backbone("resnet18:tiny")


def test_split_columns_covers_width():
    assert _split_columns(200, 4) == [(0, 50), (50, 100), (100, 150), (150, 200)]
    ranges = _split_columns(17, 4)
    assert ranges[0][0] == 0 and ranges[-1][1] == 17
    for (_, hi), (lo, _) in zip(ranges, ranges[1:]):
        assert hi == lo
    assert all(hi > lo for lo, hi in ranges)


def test_writer_layout_roundtrip(tmp_path):
    values = np.arange(12, dtype=np.float32).reshape(3, 4) / 7.0
    path = tmp_path / "d.pald"
    write_descriptors(path, values, source_tag="unit")
    parsed, tag = _parse_pald(path.read_bytes())
    assert tag == "unit"
    assert np.array_equal(parsed, values)

    write_descriptors(path, values)  # no tag: header + payload only
    assert len(path.read_bytes()) == 16 + values.size * 4
    with pytest.raises(ValueError, match="2-D"):
        write_descriptors(path, values.reshape(-1))


def test_list_frames_sorted_and_errors(tmp_path):
    frame_dir, paths = _write_frames(tmp_path, 3)
    (frame_dir / "notes.txt").write_text("ignored")
    assert list_frames(frame_dir) == paths
    with pytest.raises(FileNotFoundError, match="frame directory"):
        list_frames(tmp_path / "nope")
    empty = tmp_path / "empty"
    empty.mkdir()
    with pytest.raises(ValueError, match="no image frames"):
        list_frames(empty)


def test_extract_shapes_and_norms(tmp_path):
    _write_frames(tmp_path, 6)
    cfg = _config(tmp_path)
    report = extract(cfg)
    assert (report.count, report.dim) == (6, 512)
    assert report.skipped == []
    values, tag = _parse_pald(cfg.output_file.read_bytes())
    assert values.shape == (6, 512)
    assert values.dtype == np.float32
    assert tag == BACKBONE
    norms = np.linalg.norm(values.astype(np.float64), axis=1)
    assert np.all(np.abs(norms - 1.0) <= 1e-4)


def test_extract_concat_dimension(tmp_path):
    _write_frames(tmp_path, 2)
    cfg = _config(tmp_path, parts=4, aggregation="concat")
    report = extract(cfg)
    assert (report.count, report.dim) == (2, 2048)


def test_duplicate_frames_identical_rows(tmp_path):
    frame_dir = tmp_path / "frames"
    frame_dir.mkdir()
    rng = np.random.default_rng(1)
    img = rng.integers(0, 256, size=(60, 200, 3), dtype=np.uint8)
    cv2.imwrite(str(frame_dir / "a.png"), img)
    cv2.imwrite(str(frame_dir / "b.png"), img)
    cfg = _config(tmp_path)
    extract(cfg)
    values, _ = _parse_pald(cfg.output_file.read_bytes())
    assert np.array_equal(values[0], values[1])


def test_extract_deterministic_bytes(tmp_path):
    _write_frames(tmp_path, 4)
    cfg_a = _config(tmp_path, output_file=tmp_path / "a.pald")
    cfg_b = _config(tmp_path, output_file=tmp_path / "b.pald")
    extract(cfg_a)
    extract(cfg_b)
    assert (tmp_path / "a.pald").read_bytes() == (tmp_path / "b.pald").read_bytes()


def test_unreadable_frame_skipped_with_warning(tmp_path, caplog):
    frame_dir, _ = _write_frames(tmp_path, 3)
    (frame_dir / "frame_001.png").write_bytes(b"this is not an image")
    cfg = _config(tmp_path)
    with caplog.at_level("WARNING"):
        report = extract(cfg)
    assert report.skipped == [1]
    assert report.count == 2
    assert any("unreadable frame 1" in r.message for r in caplog.records)


def test_all_frames_unreadable_is_error(tmp_path):
    frame_dir = tmp_path / "frames"
    frame_dir.mkdir()
    (frame_dir / "bad.png").write_bytes(b"nope")
    with pytest.raises(ValueError, match="no readable frames"):
        extract(_config(tmp_path))


def test_describe_image_part_order_validation(tmp_path):
    cfg = _config(tmp_path, parts=4)
    backbone = load_backbone(BACKBONE)
    img = np.random.default_rng(2).uniform(0, 1, size=(60, 200, 3)).astype(np.float32)
    with pytest.raises(ValueError, match="part_order must permute"):
        describe_image(img, cfg, backbone, part_order=[0, 0, 1, 2])


def test_concat_layout_follows_part_index(tmp_path):
    # processing order must not leak into the concat layout
    cfg = _config(tmp_path, parts=2, aggregation="concat")
    backbone = load_backbone(BACKBONE)
    img = np.random.default_rng(3).uniform(0, 1, size=(60, 200, 3)).astype(np.float32)
    plain = describe_image(img, cfg, backbone)
    swapped = describe_image(img, cfg, backbone, part_order=[1, 0])
    assert np.allclose(plain, swapped, atol=1e-5)


def test_load_rgb_shapes(tmp_path):
    frame_dir, paths = _write_frames(tmp_path, 1)
    img = load_rgb(paths[0])
    assert img.shape == (60, 200, 3)
    assert img.dtype == np.float32
    assert 0.0 <= img.min() and img.max() <= 1.0
    assert load_rgb(frame_dir / "missing.png") is None
