"""Global image descriptors: the patch-normalized SAD baseline and the
split/aggregate logic that turns per-part vectors into one frame descriptor.

A descriptor is a 1-D float vector. Frames can be split horizontally into 1,
2 or 4 equal parts; the per-part vectors are then either summed (and
re-normalized to unit length, so cosine distances stay comparable across
split counts) or concatenated. Externally computed deep descriptors enter
through :mod:`paloc.interchange` and are treated as opaque unit vectors.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import cv2
import numpy as np

from .images import to_grayscale

AGGREGATION_MODES = ("sum", "concat")


@dataclass(frozen=True)
class SadConfig:
    """Parameters of the SAD baseline descriptor (per sub-image).

    The input is grayscale-reduced, downsampled to ``thumb_width`` x
    ``thumb_height``, and every ``patch_size`` square tile is normalized to
    zero mean and unit standard deviation; ``epsilon`` floors the divisor so
    flat tiles come out as zeros instead of NaN.
    """

    thumb_width: int = 64
    thumb_height: int = 16
    patch_size: int = 8
    epsilon: float = 1e-6

    def __post_init__(self) -> None:
        if self.patch_size <= 0 or self.thumb_width <= 0 or self.thumb_height <= 0:
            raise ValueError(
                f"thumb dimensions and patch_size must be positive, got "
                f"{self.thumb_width}x{self.thumb_height} patch {self.patch_size}"
            )
        if self.thumb_width % self.patch_size or self.thumb_height % self.patch_size:
            raise ValueError(
                f"patch_size {self.patch_size} must divide thumb dimensions "
                f"{self.thumb_width}x{self.thumb_height}"
            )
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be positive: {self.epsilon}")

    @property
    def dim(self) -> int:
        return self.thumb_width * self.thumb_height


@dataclass(frozen=True)
class DescriptorSet:
    """Ordered descriptors for a frame sequence, one row per frame.

    ``values`` is an ``(n, dim)`` float32 array; row order matches frame
    order. ``source_tag`` records how the vectors were produced ("sad",
    "deep", ...).
    """

    values: np.ndarray
    source_tag: str = ""

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(np.asarray(self.values, dtype=np.float32))
        if arr.ndim != 2:
            raise ValueError(f"descriptor set must be 2-D, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("descriptor set contains non-finite values")
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]


def split_panorama(pano: np.ndarray, parts: int) -> list[np.ndarray]:
    """Cut a panorama into equal-width sub-images, left to right.

    Concatenating the returned views along the width axis reconstructs the
    input exactly.
    """
    if parts not in (1, 2, 4):
        raise ValueError(f"parts must be 1, 2 or 4, got {parts}")
    pano = np.asarray(pano)
    width = pano.shape[1]
    if width % parts:
        raise ValueError(
            f"panorama width {width} is not divisible into {parts} parts"
        )
    step = width // parts
    return [pano[:, k * step:(k + 1) * step] for k in range(parts)]


def sad_descriptor(img: np.ndarray, cfg: SadConfig = SadConfig()) -> np.ndarray:
    """Patch-normalized thumbnail descriptor of one (sub-)image.

    Grayscale, area-downsample to the configured thumbnail size, normalize
    each tile to zero mean / unit std (flat tiles become zeros), flatten
    row-major. The result is not L2-normalized; a flat input therefore gives
    the all-zero vector.
    """
    gray = to_grayscale(img).astype(np.float64)
    if gray.size == 0:
        raise ValueError("empty image")
    if gray.shape != (cfg.thumb_height, cfg.thumb_width):
        # float64 resize keeps the descriptor linear in pixel values to
        # machine precision, which the brightness-invariance contract needs
        gray = cv2.resize(
            gray, (cfg.thumb_width, cfg.thumb_height), interpolation=cv2.INTER_AREA
        )

    p = cfg.patch_size
    tiles = gray.reshape(cfg.thumb_height // p, p, cfg.thumb_width // p, p)
    tiles = tiles.transpose(0, 2, 1, 3)  # (ty, tx, p, p)
    means = tiles.mean(axis=(2, 3), keepdims=True)
    stds = tiles.std(axis=(2, 3), keepdims=True)
    normalized = (tiles - means) / np.maximum(stds, cfg.epsilon)
    thumb = normalized.transpose(0, 2, 1, 3).reshape(cfg.thumb_height, cfg.thumb_width)
    return thumb.reshape(-1).astype(np.float32)


def aggregate(subdescs: list[np.ndarray], mode: str = "sum") -> np.ndarray:
    """Combine per-part descriptors into one frame descriptor.

    ``sum`` adds element-wise and re-normalizes to unit length (permutation
    invariant); ``concat`` joins in the given order without renormalizing.
    """
    if not subdescs:
        raise ValueError("no descriptors to aggregate")
    if mode not in AGGREGATION_MODES:
        raise ValueError(f"unknown aggregation mode: {mode!r}")
    dims = {np.asarray(d).shape for d in subdescs}
    if len(dims) != 1 or len(next(iter(dims))) != 1:
        raise ValueError(f"descriptors must share one 1-D shape, got {sorted(dims)}")
    stack = np.stack([np.asarray(d, dtype=np.float64) for d in subdescs])
    if mode == "concat":
        return stack.reshape(-1).astype(np.float32)
    total = stack.sum(axis=0)
    norm = np.linalg.norm(total)
    if norm == 0:
        raise ValueError("sum of descriptors is the zero vector; cannot normalize")
    return (total / norm).astype(np.float32)


def cosine_distance(a: np.ndarray, b: np.ndarray) -> float:
    """``1 - cos(a, b)``, in [0, 2]. Zero-norm inputs are rejected: a zero
    descriptor means a degenerate (constant) image upstream."""
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ValueError("cosine distance undefined for zero-norm descriptor")
    return float(np.clip(1.0 - np.dot(a, b) / (na * nb), 0.0, 2.0))


def describe_frame(
    pano: np.ndarray,
    parts: int = 4,
    aggregation: str = "sum",
    cfg: SadConfig = SadConfig(),
    part_order: list[int] | None = None,
) -> np.ndarray:
    """SAD descriptor of a whole panorama: split, describe parts, aggregate.

    ``part_order`` reorders the per-part descriptors before aggregation (used
    when query and database sequences were traversed in opposite directions).
    """
    subs = [sad_descriptor(part, cfg) for part in split_panorama(pano, parts)]
    if part_order is not None:
        if sorted(part_order) != list(range(len(subs))):
            raise ValueError(
                f"part_order must permute 0..{len(subs) - 1}, got {part_order}"
            )
        subs = [subs[k] for k in part_order]
    return aggregate(subs, aggregation)


def describe_frames(
    panos: list[np.ndarray],
    parts: int = 4,
    aggregation: str = "sum",
    cfg: SadConfig = SadConfig(),
    part_order: list[int] | None = None,
) -> DescriptorSet:
    """Apply :func:`describe_frame` over an ordered frame list."""
    from .parallel import map_ordered

    rows = map_ordered(
        lambda pano: describe_frame(pano, parts, aggregation, cfg, part_order), panos
    )
    if not rows:
        raise ValueError("no frames to describe")
    return DescriptorSet(np.stack(rows), source_tag="sad")
