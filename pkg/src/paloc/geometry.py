"""Annular-lens calibration and polar unwrapping of ring images.

A panoramic annular camera delivers a ring-shaped raster. Given the ring
center and the two circular borders, every output pixel (i, j) of the
rectangular panorama maps back to a source position at radius

    rho = r_min + (r_max - r_min) * i / out_height

and azimuth ``theta = 2*pi*j / out_width``. The source position is, by
default, ``x = center_row + rho*sin(theta)``, ``y = center_col +
rho*cos(theta)``: the two center coordinates deliberately cross axes. That is
the published mapping and is what calibrations in the wild are tuned against;
``swap_axes=True`` selects the uncrossed convention instead. For a centered
lens (center_col == center_row) the two agree.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .images import bilinear_sample

DEFAULT_ASPECT_RATIO = 4.8
DEFAULT_OUT_WIDTH = 1920
DEFAULT_VERTICAL_FOV_DEG = 75.0

_CALIBRATION_FIELDS = {"center_col", "center_row", "r_min", "r_max",
                       "vertical_fov_deg", "flip_radial"}
_REQUIRED_FIELDS = ("center_col", "center_row", "r_min", "r_max")
_BOOL_VALUES = {"true": True, "1": True, "yes": True,
                "false": False, "0": False, "no": False}


class CalibrationError(ValueError):
    """Calibration file failed to parse or violates an invariant."""


@dataclass(frozen=True)
class AnnularCalibration:
    """Center and radial borders of the annular image, in pixels.

    ``center_col``/``center_row`` locate the ring center in the source
    raster; ``r_min``/``r_max`` are the inner and outer circular borders.
    ``flip_radial`` maps output row 0 to ``r_max`` instead of ``r_min``, for
    lenses mounted upside down.
    """

    center_col: float
    center_row: float
    r_min: float
    r_max: float
    vertical_fov_deg: float = DEFAULT_VERTICAL_FOV_DEG
    flip_radial: bool = False

    def __post_init__(self) -> None:
        if not (0 < self.r_min < self.r_max):
            raise CalibrationError(
                f"r_min >= r_max (or non-positive): r_min={self.r_min}, "
                f"r_max={self.r_max}"
            )
        for name in ("center_col", "center_row"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise CalibrationError(
                    f"{name} outside plausible bounds: {value}"
                )
        if not 0 < self.vertical_fov_deg < 180:
            raise CalibrationError(
                f"vertical_fov_deg must be in (0, 180): {self.vertical_fov_deg}"
            )


def load_calibration(path: str | Path) -> AnnularCalibration:
    """Parse a ``key=value`` calibration file.

    Recognized keys: ``center_col``, ``center_row``, ``r_min``, ``r_max``,
    optional ``vertical_fov_deg`` (default 75) and ``flip_radial``. Blank
    lines and ``#`` comments are ignored.
    """
    path = Path(path)
    fields: dict[str, float | bool] = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CalibrationError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, raw = line.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in _CALIBRATION_FIELDS:
            raise CalibrationError(f"{path}:{lineno}: unknown field {key!r}")
        if key == "flip_radial":
            if raw.lower() not in _BOOL_VALUES:
                raise CalibrationError(
                    f"{path}:{lineno}: flip_radial must be true/false, got {raw!r}"
                )
            fields[key] = _BOOL_VALUES[raw.lower()]
        else:
            try:
                fields[key] = float(raw)
            except ValueError:
                raise CalibrationError(
                    f"{path}:{lineno}: field {key!r} is not a number: {raw!r}"
                ) from None
    missing = [name for name in _REQUIRED_FIELDS if name not in fields]
    if missing:
        raise CalibrationError(f"{path}: missing required field(s): {', '.join(missing)}")
    return AnnularCalibration(**fields)  # type: ignore[arg-type]


def polar_map(
    i,
    j,
    calib: AnnularCalibration,
    out_width: int,
    out_height: int,
    swap_axes: bool = False,
):
    """Source position (x=col, y=row) sampled by output pixel (i, j).

    Pure and deterministic; accepts scalars or broadcastable arrays. Radius
    grows with i (row 0 is the inner border unless ``flip_radial``), azimuth
    is ``2*pi*j/out_width`` so column ``out_width`` would alias column 0 and
    is never emitted.
    """
    i = np.asarray(i, dtype=np.float64)
    j = np.asarray(j, dtype=np.float64)
    if calib.flip_radial:
        i = out_height - 1 - i
    rho = calib.r_min + (calib.r_max - calib.r_min) * i / out_height
    theta = 2.0 * np.pi * j / out_width
    if swap_axes:
        x = calib.center_col + rho * np.sin(theta)
        y = calib.center_row + rho * np.cos(theta)
    else:
        x = calib.center_row + rho * np.sin(theta)
        y = calib.center_col + rho * np.cos(theta)
    return x, y


def _check_borders(img_shape, calib: AnnularCalibration, swap_axes: bool) -> None:
    h, w = img_shape[:2]
    # Effective center in (col, row) sample space depends on the axis convention.
    cx, cy = ((calib.center_col, calib.center_row) if swap_axes
              else (calib.center_row, calib.center_col))
    overflow = max(
        calib.r_max - cx,
        cx + calib.r_max - (w - 1),
        calib.r_max - cy,
        cy + calib.r_max - (h - 1),
    )
    if overflow >= 2.0:
        raise CalibrationError(
            f"outer border exceeds the image by {overflow:.1f} px "
            f"(r_max={calib.r_max}, image {w}x{h})"
        )
    if overflow > 0.0:
        warnings.warn(
            f"outer border exceeds the image by {overflow:.2f} px; "
            "edge pixels will be zero-filled",
            stacklevel=3,
        )


def unwrap(
    img: np.ndarray,
    calib: AnnularCalibration,
    out_width: int = DEFAULT_OUT_WIDTH,
    aspect_ratio: float = DEFAULT_ASPECT_RATIO,
    swap_axes: bool = False,
) -> np.ndarray:
    """Unwrap an annular raster into a rectangular panorama.

    Output height is ``round(out_width / aspect_ratio)``; every output pixel
    is bilinearly sampled at its :func:`polar_map` position, zero-filled where
    the position falls outside the source. Returns float32.
    """
    if out_width < 8:
        raise ValueError(f"degenerate output width: {out_width} (minimum 8)")
    if aspect_ratio <= 0:
        raise ValueError(f"aspect ratio must be positive: {aspect_ratio}")
    img = np.asarray(img)
    if img.ndim not in (2, 3):
        raise ValueError(f"expected (h, w) or (h, w, c) raster, got shape {img.shape}")
    _check_borders(img.shape, calib, swap_axes)

    out_height = int(round(out_width / aspect_ratio))
    jj, ii = np.meshgrid(np.arange(out_width), np.arange(out_height))
    x, y = polar_map(ii, jj, calib, out_width, out_height, swap_axes=swap_axes)
    return bilinear_sample(img, x, y)
