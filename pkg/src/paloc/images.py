"""Raster I/O and sampling helpers shared by the unwrapping and descriptor code.

Images are numpy arrays: ``(h, w)`` grayscale or ``(h, w, 3)`` RGB, indexed
``pixels[row, col]``. Files are read and written as 8-bit PNG/JPEG through
OpenCV; in-memory processing happens in float32.
"""

from __future__ import annotations

from pathlib import Path

import cv2
import numpy as np

IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg")


class ImageReadError(IOError):
    """An image file was missing or could not be decoded."""


def load_image(path: str | Path, grayscale: bool = False) -> np.ndarray:
    """Read an 8-bit PNG/JPEG as float32, RGB channel order for color."""
    flag = cv2.IMREAD_GRAYSCALE if grayscale else cv2.IMREAD_COLOR
    raw = cv2.imread(str(path), flag)
    if raw is None:
        raise ImageReadError(f"cannot read image: {path}")
    if raw.ndim == 3:
        raw = cv2.cvtColor(raw, cv2.COLOR_BGR2RGB)
    return raw.astype(np.float32)


def save_image(path: str | Path, pixels: np.ndarray) -> None:
    """Write a float or uint8 raster as PNG (rounded and clipped to 8-bit)."""
    arr = np.asarray(pixels)
    if arr.dtype != np.uint8:
        arr = np.clip(np.rint(arr), 0, 255).astype(np.uint8)
    if arr.ndim == 3:
        arr = cv2.cvtColor(arr, cv2.COLOR_RGB2BGR)
    if not cv2.imwrite(str(path), arr):
        raise IOError(f"cannot write image: {path}")


def list_frames(directory: str | Path) -> list[Path]:
    """Image files in a directory, lexicographically sorted by filename.

    The sort order is the temporal contract: frame index == position in this
    listing.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"frame directory not found: {directory}")
    frames = sorted(
        p for p in directory.iterdir() if p.suffix.lower() in IMAGE_EXTENSIONS
    )
    if not frames:
        raise FileNotFoundError(f"no image frames in: {directory}")
    return frames


def to_grayscale(pixels: np.ndarray) -> np.ndarray:
    """Rec. 601 luma for RGB input; pass-through for single-channel."""
    arr = np.asarray(pixels, dtype=np.float32)
    if arr.ndim == 2:
        return arr
    if arr.ndim == 3 and arr.shape[2] == 3:
        return arr[..., 0] * 0.299 + arr[..., 1] * 0.587 + arr[..., 2] * 0.114
    raise ValueError(f"expected (h, w) or (h, w, 3) raster, got shape {arr.shape}")


def bilinear_sample(pixels: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Sample ``pixels`` at subpixel positions (x=col, y=row), zero outside.

    Written in the incremental form ``v00 + fx*(v01-v00)`` so that sampling a
    constant image returns the constant bit-exactly, whatever the weights.
    A position is outside once it can no longer be interpolated from in-bounds
    pixels (x > w-1 etc.) and yields exactly zero.
    """
    img = np.asarray(pixels, dtype=np.float32)
    h, w = img.shape[:2]
    x = np.asarray(x, dtype=np.float32)
    y = np.asarray(y, dtype=np.float32)

    valid = (x >= 0) & (x <= w - 1) & (y >= 0) & (y <= h - 1)
    xc = np.clip(x, 0, w - 1)
    yc = np.clip(y, 0, h - 1)
    x0 = np.minimum(np.floor(xc).astype(np.intp), max(w - 2, 0))
    y0 = np.minimum(np.floor(yc).astype(np.intp), max(h - 2, 0))
    fx = xc - x0
    fy = yc - y0
    if img.ndim == 3:
        fx = fx[..., np.newaxis]
        fy = fy[..., np.newaxis]
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)

    v00 = img[y0, x0]
    v01 = img[y0, x1]
    v10 = img[y1, x0]
    v11 = img[y1, x1]
    top = v00 + fx * (v01 - v00)
    bottom = v10 + fx * (v11 - v10)
    out = top + fy * (bottom - top)

    mask = valid if img.ndim == 2 else valid[..., np.newaxis]
    return np.where(mask, out, np.float32(0.0))
