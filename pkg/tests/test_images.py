from __future__ import annotations

import numpy as np
import pytest

from paloc.images import (
    ImageReadError,
    bilinear_sample,
    list_frames,
    load_image,
    save_image,
    to_grayscale,
)


def _checker(h, w):
    img = np.zeros((h, w), dtype=np.float32)
    img[::2, ::2] = 200.0
    img[1::2, 1::2] = 200.0
    return img


def test_save_load_roundtrip_grayscale(tmp_path):
    img = _checker(16, 24)
    path = tmp_path / "frame.png"
    save_image(path, img)
    back = load_image(path, grayscale=True)
    assert back.dtype == np.float32
    assert back.shape == (16, 24)
    assert np.array_equal(back, img)


def test_save_load_roundtrip_rgb(tmp_path):
    rng = np.random.default_rng(3)
    img = rng.integers(0, 256, size=(10, 12, 3)).astype(np.float32)
    path = tmp_path / "frame.png"
    save_image(path, img)
    back = load_image(path)
    assert back.shape == (10, 12, 3)
    assert np.array_equal(back, img)


def test_load_missing_file_raises(tmp_path):
    with pytest.raises(ImageReadError):
        load_image(tmp_path / "nope.png")


def test_to_grayscale_rec601_weights():
    img = np.zeros((2, 2, 3), dtype=np.float32)
    img[..., 0] = 100.0
    gray = to_grayscale(img)
    assert gray.shape == (2, 2)
    assert np.allclose(gray, 29.9, atol=1e-3)
    img2 = np.zeros((1, 1, 3), dtype=np.float32)
    img2[..., 1] = 100.0
    assert np.allclose(to_grayscale(img2), 58.7, atol=1e-3)


def test_to_grayscale_passthrough_on_2d():
    img = _checker(4, 4)
    assert np.array_equal(to_grayscale(img), img)
    with pytest.raises(ValueError):
        to_grayscale(np.zeros((2, 2, 4), dtype=np.float32))


def test_list_frames_sorted_lexicographically(tmp_path):
    names = ["b_02.png", "a_10.png", "a_02.png"]
    for name in names:
        save_image(tmp_path / name, np.zeros((4, 4), dtype=np.float32))
    frames = list_frames(tmp_path)
    assert [p.name for p in frames] == ["a_02.png", "a_10.png", "b_02.png"]


def test_list_frames_ignores_non_images(tmp_path):
    save_image(tmp_path / "f.png", np.zeros((4, 4), dtype=np.float32))
    (tmp_path / "notes.txt").write_text("hi", encoding="utf-8")
    frames = list_frames(tmp_path)
    assert [p.name for p in frames] == ["f.png"]


def test_list_frames_empty_dir_raises(tmp_path):
    with pytest.raises(FileNotFoundError):
        list_frames(tmp_path)


def test_list_frames_missing_dir_raises(tmp_path):
    with pytest.raises(FileNotFoundError):
        list_frames(tmp_path / "absent")


def test_bilinear_interior_matches_manual():
    img = np.array([[0.0, 10.0], [20.0, 40.0]], dtype=np.float32)
    # x is the column coordinate, y the row coordinate
    x = np.array([0.25])
    y = np.array([0.5])
    top = 0.0 + 0.25 * (10.0 - 0.0)
    bottom = 20.0 + 0.25 * (40.0 - 20.0)
    expect = top + 0.5 * (bottom - top)
    out = bilinear_sample(img, x, y)
    assert np.allclose(out, expect, atol=1e-6)


def test_bilinear_exact_at_grid_points():
    rng = np.random.default_rng(11)
    img = rng.uniform(0, 255, size=(7, 9)).astype(np.float32)
    rows, cols = np.mgrid[0:7, 0:9]
    out = bilinear_sample(
        img, cols.ravel().astype(np.float64), rows.ravel().astype(np.float64)
    ).reshape(7, 9)
    # interior grid points hit the fx=0 fast path and are bit-exact; the last
    # row/column interpolate with weight 1 and only round-trip to rounding
    assert np.array_equal(out[:6, :8], img[:6, :8])
    assert np.allclose(out, img, atol=1e-3)


def test_bilinear_constant_field_is_exact():
    img = np.full((5, 5), 77.0, dtype=np.float32)
    rng = np.random.default_rng(5)
    x = rng.uniform(0, 4, size=200)
    y = rng.uniform(0, 4, size=200)
    out = bilinear_sample(img, x, y)
    assert np.all(out == 77.0)


def test_bilinear_out_of_bounds_is_zero():
    img = np.full((4, 4), 50.0, dtype=np.float32)
    x = np.array([-0.6, 5.0, 1.0])
    y = np.array([1.0, 1.0, -2.0])
    out = bilinear_sample(img, x, y)
    assert np.all(out == 0.0)


def test_bilinear_rgb_channels_independent():
    img = np.zeros((3, 3, 3), dtype=np.float32)
    img[..., 0] = 10.0
    img[..., 2] = 30.0
    out = bilinear_sample(img, np.array([1.5]), np.array([1.5]))
    assert out.shape == (1, 3)
    assert np.allclose(out[0], [10.0, 0.0, 30.0])
