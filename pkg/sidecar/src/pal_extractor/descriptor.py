"""Frame directory -> deep global descriptors -> interchange file."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import cv2
import numpy as np

from .backbone import Backbone, load_backbone
from .frames import list_frames, load_rgb
from .interchange import write_descriptors

log = logging.getLogger(__name__)

AGGREGATION_MODES = ("sum", "concat")


@dataclass(frozen=True)
class ExtractorConfig:
    input_dir: Path
    output_file: Path
    parts: int = 4
    input_size: int = 224
    backbone: str = "resnet18"
    aggregation: str = "sum"

    def __post_init__(self) -> None:
        if self.parts not in (1, 2, 4):
            raise ValueError(f"parts must be 1, 2 or 4, got {self.parts}")
        if self.input_size <= 0:
            raise ValueError(f"input_size must be > 0, got {self.input_size}")
        if self.aggregation not in AGGREGATION_MODES:
            raise ValueError(f"unknown aggregation {self.aggregation!r}")


@dataclass
class ExtractReport:
    frames: list[Path]
    skipped: list[int] = field(default_factory=list)
    count: int = 0
    dim: int = 0


def _split_columns(width: int, parts: int) -> list[tuple[int, int]]:
    """Contiguous column ranges covering the full width, widest-last when
    the width does not divide evenly."""
    return [(width * p // parts, width * (p + 1) // parts) for p in range(parts)]


def describe_image(
    img_rgb: np.ndarray,
    cfg: ExtractorConfig,
    backbone: Backbone,
    part_order: list[int] | None = None,
) -> np.ndarray:
    """One L2-normalized descriptor for an HxWx3 [0, 1] RGB frame.

    ``part_order`` only reorders which sub-image lands in which batch slot;
    sum aggregation must come out the same for any order.
    """
    size = cfg.input_size
    order = list(range(cfg.parts)) if part_order is None else list(part_order)
    if sorted(order) != list(range(cfg.parts)):
        raise ValueError(f"part_order must permute 0..{cfg.parts - 1}, got {order}")
    ranges = _split_columns(img_rgb.shape[1], cfg.parts)
    batch = np.stack([
        cv2.resize(
            img_rgb[:, ranges[p][0]:ranges[p][1]], (size, size),
            interpolation=cv2.INTER_AREA,
        )
        for p in order
    ])
    embedded = backbone.embed(batch)
    if cfg.aggregation == "sum":
        vec = embedded.sum(axis=0)
    else:
        # undo the processing order so concat layout always follows part index
        slots = np.empty_like(embedded)
        for slot, p in enumerate(order):
            slots[p] = embedded[slot]
        vec = slots.reshape(-1)
    norm = float(np.linalg.norm(vec.astype(np.float64)))
    if norm == 0.0:
        raise ValueError("descriptor collapsed to the zero vector")
    return (vec / norm).astype(np.float32)


def extract(cfg: ExtractorConfig) -> ExtractReport:
    """Process every readable frame in filename order and write the file.

    Unreadable frames are skipped with a warning and their indices recorded
    in the report; an input directory with no image files is an error.
    """
    frames = list_frames(cfg.input_dir)
    backbone = load_backbone(cfg.backbone)
    report = ExtractReport(frames=frames)

    rows = []
    for index, path in enumerate(frames):
        img = load_rgb(path)
        if img is None:
            log.warning("skipping unreadable frame %d: %s", index, path)
            report.skipped.append(index)
            continue
        rows.append(describe_image(img, cfg, backbone))
    if not rows:
        raise ValueError(f"no readable frames in {cfg.input_dir}")

    values = np.stack(rows)
    write_descriptors(cfg.output_file, values, source_tag=cfg.backbone)
    report.count, report.dim = values.shape
    return report
