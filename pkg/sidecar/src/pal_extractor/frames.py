"""Frame directory listing and robust image loading."""

from __future__ import annotations

from pathlib import Path

import cv2
import numpy as np

_SUFFIXES = (".png", ".jpg", ".jpeg")


def list_frames(frame_dir: str | Path) -> list[Path]:
    """Image files in lexicographic filename order; that order is the frame
    order everywhere downstream."""
    frame_dir = Path(frame_dir)
    if not frame_dir.is_dir():
        raise FileNotFoundError(f"frame directory not found: {frame_dir}")
    frames = sorted(
        p for p in frame_dir.iterdir() if p.suffix.lower() in _SUFFIXES
    )
    if not frames:
        raise ValueError(f"no image frames in {frame_dir}")
    return frames


def load_rgb(path: Path) -> np.ndarray | None:
    """HxWx3 float32 RGB in [0, 1], or None when the file cannot be decoded."""
    raw = cv2.imread(str(path), cv2.IMREAD_COLOR)
    if raw is None:
        return None
    rgb = cv2.cvtColor(raw, cv2.COLOR_BGR2RGB)
    return rgb.astype(np.float32) / 255.0
