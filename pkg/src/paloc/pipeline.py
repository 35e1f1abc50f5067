"""End-to-end batch pipeline: images in, decisions and metrics out.

A run ingests database and query frame directories (or precomputed
descriptor files), optionally unwraps annular frames, computes descriptors,
matches queries online in frame order, evaluates against ground truth when
given, and writes every artifact into the output directory:

    db_descriptors.pald, query_descriptors.pald
    decisions.csv
    metrics.txt / metrics.kv       (when ground truth is given)
    distances.csv/.pald, scores.csv/.pald   (with dump_matrices)
    report.json

Frame order within a directory is the lexicographic filename sort; that
ordering is the temporal contract the sequence matcher depends on, so name
frames with zero-padded counters. Fixed inputs and config give bytewise
identical decisions.csv across runs.
"""

from __future__ import annotations

import json
import statistics
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .descriptors import (
    AGGREGATION_MODES,
    DescriptorSet,
    SadConfig,
    describe_frame,
)
from .evaluation import (
    EvalConfig,
    Metrics,
    evaluate_f1,
    evaluate_geo,
    load_db_geo_csv,
    load_ground_truth_csv,
    metrics_key_values,
    metrics_table,
)
from .geometry import AnnularCalibration, load_calibration, unwrap
from .images import list_frames, load_image
from .interchange import read_descriptors, write_descriptors
from .matching import ConeParams, MatchDecision, OnlineMatcher, write_decisions_csv
from .parallel import map_ordered

DESCRIPTOR_SAD = "sad"
DESCRIPTOR_FILE_PREFIX = "file:"


def parse_key_values(text: str) -> dict[str, str]:
    """Parse the config format: one ``key = value`` per line, # comments."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value, got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ValueError(f"line {lineno}: empty key")
        if key in out:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value.strip()
    return out


def _parse_bool(value: str, key: str) -> bool:
    low = value.lower()
    if low in ("true", "1", "yes"):
        return True
    if low in ("false", "0", "no"):
        return False
    raise ValueError(f"{key}: expected a boolean, got {value!r}")


def parse_part_order(value: str, parts: int) -> list[int] | None:
    """``reverse`` or a comma-separated permutation of 0..parts-1."""
    if not value or value.lower() == "none":
        return None
    if value.lower() == "reverse":
        return list(range(parts))[::-1]
    try:
        order = [int(tok) for tok in value.split(",")]
    except ValueError:
        raise ValueError(f"reorder_parts: expected 'reverse' or ints, got {value!r}")
    if sorted(order) != list(range(parts)):
        raise ValueError(
            f"reorder_parts must permute 0..{parts - 1}, got {value!r}"
        )
    return order


@dataclass(frozen=True)
class PipelineConfig:
    """Everything one run needs; every field has a config-file key of the
    same name (cone and eval fields are flattened into top-level keys)."""

    database_dir: Path
    query_dir: Path
    output_dir: Path
    calibration: Path | None = None
    descriptor: str = DESCRIPTOR_SAD
    parts: int = 4
    aggregation: str = "sum"
    reorder_parts: str = ""
    thumb_width: int = 64
    thumb_height: int = 16
    patch_size: int = 8
    out_width: int = 1920
    aspect_ratio: float = 4.8
    swap_axes: bool = False
    cone: ConeParams = field(default_factory=ConeParams)
    eval_cfg: EvalConfig = field(default_factory=EvalConfig)
    ground_truth: Path | None = None
    db_geo: Path | None = None
    dump_matrices: bool = False
    seed: int = 0

    def __post_init__(self) -> None:
        if not (
            self.descriptor == DESCRIPTOR_SAD
            or self.descriptor.startswith(DESCRIPTOR_FILE_PREFIX)
        ):
            raise ValueError(
                f"descriptor must be 'sad' or 'file:<db.pald>,<query.pald>', "
                f"got {self.descriptor!r}"
            )
        if self.parts not in (1, 2, 4):
            raise ValueError(f"parts must be 1, 2 or 4, got {self.parts}")
        if self.aggregation not in AGGREGATION_MODES:
            raise ValueError(f"unknown aggregation {self.aggregation!r}")
        parse_part_order(self.reorder_parts, self.parts)

    def descriptor_files(self) -> tuple[Path, Path] | None:
        if not self.descriptor.startswith(DESCRIPTOR_FILE_PREFIX):
            return None
        raw = self.descriptor[len(DESCRIPTOR_FILE_PREFIX):]
        pieces = [p.strip() for p in raw.split(",")]
        if len(pieces) != 2 or not all(pieces):
            raise ValueError(
                "descriptor=file: needs two comma-separated paths "
                f"(database, query), got {raw!r}"
            )
        return Path(pieces[0]), Path(pieces[1])

    def part_order(self) -> list[int] | None:
        return parse_part_order(self.reorder_parts, self.parts)

    def sad_config(self) -> SadConfig:
        return SadConfig(
            thumb_width=self.thumb_width,
            thumb_height=self.thumb_height,
            patch_size=self.patch_size,
        )

    def echo(self) -> dict:
        """Effective configuration including all defaults, for the report."""
        cone = self.cone
        ev = self.eval_cfg
        return {
            "database_dir": str(self.database_dir),
            "query_dir": str(self.query_dir),
            "output_dir": str(self.output_dir),
            "calibration": str(self.calibration) if self.calibration else "none",
            "descriptor": self.descriptor,
            "parts": self.parts,
            "aggregation": self.aggregation,
            "reorder_parts": self.reorder_parts,
            "thumb_width": self.thumb_width,
            "thumb_height": self.thumb_height,
            "patch_size": self.patch_size,
            "out_width": self.out_width,
            "aspect_ratio": self.aspect_ratio,
            "swap_axes": self.swap_axes,
            "n_q": cone.n_q,
            "v_min": cone.v_min,
            "v_max": cone.v_max,
            "uniqueness_window": cone.uniqueness_window,
            "uniqueness_ratio": cone.uniqueness_ratio,
            "min_score": cone.min_score,
            "direction": cone.direction,
            "index_tolerance": ev.index_tolerance,
            "distance_tolerance_m": ev.distance_tolerance_m,
            "pr_denominator": ev.pr_denominator,
            "ground_truth": str(self.ground_truth) if self.ground_truth else "",
            "db_geo": str(self.db_geo) if self.db_geo else "",
            "dump_matrices": self.dump_matrices,
            "seed": self.seed,
        }


_PATH_KEYS = ("database_dir", "query_dir", "output_dir")


def config_from_dict(pairs: dict[str, str]) -> PipelineConfig:
    """Build a config from parsed key=value pairs, rejecting unknown keys."""
    pairs = dict(pairs)
    missing = [k for k in _PATH_KEYS if k not in pairs]
    if missing:
        raise ValueError(f"config missing required keys: {', '.join(missing)}")

    def take(key: str, default: str) -> str:
        return pairs.pop(key, default)

    def take_int(key: str, default: int) -> int:
        raw = take(key, str(default))
        try:
            return int(raw)
        except ValueError:
            raise ValueError(f"{key}: expected an integer, got {raw!r}")

    def take_float(key: str, default: float) -> float:
        raw = take(key, str(default))
        try:
            return float(raw)
        except ValueError:
            raise ValueError(f"{key}: expected a number, got {raw!r}")

    database_dir = Path(pairs.pop("database_dir"))
    query_dir = Path(pairs.pop("query_dir"))
    output_dir = Path(pairs.pop("output_dir"))
    calibration_raw = take("calibration", "none")
    calibration = None if calibration_raw.lower() == "none" else Path(calibration_raw)
    gt_raw = take("ground_truth", "")
    db_geo_raw = take("db_geo", "")
    cone = ConeParams(
        n_q=take_int("n_q", 10),
        v_min=take_float("v_min", 0.4),
        v_max=take_float("v_max", 2.5),
        uniqueness_window=take_int("uniqueness_window", 10),
        uniqueness_ratio=take_float("uniqueness_ratio", 1.11),
        min_score=take_float("min_score", 0.3),
        direction=take("direction", "both"),
    )
    eval_cfg = EvalConfig(
        index_tolerance=take_int("index_tolerance", 5),
        distance_tolerance_m=take_float("distance_tolerance_m", 50.0),
        pr_denominator=take("pr_denominator", "all_queries"),
    )
    cfg = PipelineConfig(
        database_dir=database_dir,
        query_dir=query_dir,
        output_dir=output_dir,
        calibration=calibration,
        descriptor=take("descriptor", DESCRIPTOR_SAD),
        parts=take_int("parts", 4),
        aggregation=take("aggregation", "sum"),
        reorder_parts=take("reorder_parts", ""),
        thumb_width=take_int("thumb_width", 64),
        thumb_height=take_int("thumb_height", 16),
        patch_size=take_int("patch_size", 8),
        out_width=take_int("out_width", 1920),
        aspect_ratio=take_float("aspect_ratio", 4.8),
        swap_axes=_parse_bool(take("swap_axes", "false"), "swap_axes"),
        cone=cone,
        eval_cfg=eval_cfg,
        ground_truth=Path(gt_raw) if gt_raw else None,
        db_geo=Path(db_geo_raw) if db_geo_raw else None,
        dump_matrices=_parse_bool(take("dump_matrices", "false"), "dump_matrices"),
        seed=take_int("seed", 0),
    )
    if pairs:
        raise ValueError(f"unknown config keys: {', '.join(sorted(pairs))}")
    return cfg


def load_config(path: str | Path) -> PipelineConfig:
    return config_from_dict(parse_key_values(Path(path).read_text()))


@dataclass
class RunReport:
    decisions: list[MatchDecision]
    metrics_f1: Metrics | None
    metrics_geo: Metrics | None
    describe_ms_total: float
    describe_ms_per_frame: float
    decision_ms_median: float
    decision_ms_mean: float
    config_echo: dict
    version: str = __version__

    def to_json(self) -> str:
        body = {
            "version": self.version,
            "config": self.config_echo,
            "n_queries": len(self.decisions),
            "n_accepted": sum(d.accepted for d in self.decisions),
            "timing_ms": {
                "describe_total": round(self.describe_ms_total, 3),
                "describe_per_frame": round(self.describe_ms_per_frame, 4),
                "decision_median": round(self.decision_ms_median, 4),
                "decision_mean": round(self.decision_ms_mean, 4),
            },
            "metrics_f1": self.metrics_f1.__dict__ if self.metrics_f1 else None,
            "metrics_geo": self.metrics_geo.__dict__ if self.metrics_geo else None,
        }
        return json.dumps(body, indent=2, default=list)


def _load_sequence_descriptors(
    frame_dir: Path, cfg: PipelineConfig, calib: AnnularCalibration | None, tag: str
) -> DescriptorSet:
    frames = list_frames(frame_dir)
    order = cfg.part_order()
    sad_cfg = cfg.sad_config()

    def one(path: Path) -> np.ndarray:
        img = load_image(path)
        if calib is not None:
            img = unwrap(
                img,
                calib,
                out_width=cfg.out_width,
                aspect_ratio=cfg.aspect_ratio,
                swap_axes=cfg.swap_axes,
            )
        return describe_frame(
            img, cfg.parts, cfg.aggregation, sad_cfg, part_order=order
        )

    rows = map_ordered(one, frames)
    return DescriptorSet(np.stack(rows), source_tag=tag)


def _check_exists(path: Path | None, label: str) -> None:
    if path is not None and not path.exists():
        raise FileNotFoundError(f"{label} not found: {path}")


def run_pipeline(cfg: PipelineConfig) -> RunReport:
    """Execute a full run and write all artifacts under cfg.output_dir."""
    files = cfg.descriptor_files()
    if files is None:
        _check_exists(cfg.database_dir, "database directory")
        _check_exists(cfg.query_dir, "query directory")
    _check_exists(cfg.calibration, "calibration file")
    _check_exists(cfg.ground_truth, "ground truth file")
    _check_exists(cfg.db_geo, "database geo file")

    calib = load_calibration(cfg.calibration) if cfg.calibration else None

    describe_start = time.perf_counter()
    if files is not None:
        db_file, query_file = files
        _check_exists(db_file, "database descriptor file")
        _check_exists(query_file, "query descriptor file")
        db_set = read_descriptors(db_file)
        query_set = read_descriptors(query_file)
        n_frames = len(db_set) + len(query_set)
    else:
        db_set = _load_sequence_descriptors(cfg.database_dir, cfg, calib, "sad")
        query_set = _load_sequence_descriptors(cfg.query_dir, cfg, calib, "sad")
        n_frames = len(db_set) + len(query_set)
    describe_ms = (time.perf_counter() - describe_start) * 1000.0

    if db_set.dim != query_set.dim:
        raise ValueError(
            f"descriptor dimension mismatch: database {db_set.dim}, "
            f"query {query_set.dim}"
        )

    matcher = OnlineMatcher(db_set, cfg.cone)
    for row in query_set.values:
        matcher.push(row)
    decisions = matcher.decisions
    push_ms = [s * 1000.0 for s in matcher.push_seconds]

    metrics_f1 = None
    metrics_geo = None
    if cfg.ground_truth is not None:
        gt = load_ground_truth_csv(cfg.ground_truth, n_db=len(db_set))
        if len(gt) != len(decisions):
            raise ValueError(
                f"ground truth has {len(gt)} entries for {len(decisions)} queries"
            )
        metrics_f1 = evaluate_f1(decisions, gt, cfg.eval_cfg)
        if cfg.db_geo is not None:
            db_geo = load_db_geo_csv(cfg.db_geo)
            metrics_geo = evaluate_geo(
                decisions, gt.positions(), db_geo, gt.overlap_flags(), cfg.eval_cfg
            )

    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_descriptors(out / "db_descriptors.pald", db_set)
    write_descriptors(out / "query_descriptors.pald", query_set)
    write_decisions_csv(out / "decisions.csv", decisions)
    if metrics_f1 is not None:
        chunks = ["index protocol", metrics_table(metrics_f1)]
        kv = ["[f1]", metrics_key_values(metrics_f1)]
        if metrics_geo is not None:
            chunks += ["geo protocol", metrics_table(metrics_geo)]
            kv += ["[geo]", metrics_key_values(metrics_geo)]
        (out / "metrics.txt").write_text("\n".join(chunks) + "\n")
        (out / "metrics.kv").write_text("\n".join(kv) + "\n")
    if cfg.dump_matrices:
        dump_matrices(out, matcher.distance_matrix, matcher.score_matrix)

    report = RunReport(
        decisions=decisions,
        metrics_f1=metrics_f1,
        metrics_geo=metrics_geo,
        describe_ms_total=describe_ms,
        describe_ms_per_frame=describe_ms / max(n_frames, 1),
        decision_ms_median=statistics.median(push_ms) if push_ms else 0.0,
        decision_ms_mean=statistics.fmean(push_ms) if push_ms else 0.0,
        config_echo=cfg.echo(),
    )
    (out / "report.json").write_text(report.to_json() + "\n")
    return report


def dump_matrices(out_dir: Path, distances: np.ndarray, scores: np.ndarray) -> None:
    """Write D and S as CSV (one row per query) and as descriptor files
    tagged distmatrix/scorematrix, for external plotting."""
    np.savetxt(out_dir / "distances.csv", distances, delimiter=",", fmt="%.9f")
    np.savetxt(out_dir / "scores.csv", scores, delimiter=",", fmt="%.9f")
    write_descriptors(
        out_dir / "distances.pald",
        DescriptorSet(distances.astype(np.float32), source_tag="distmatrix"),
    )
    write_descriptors(
        out_dir / "scores.pald",
        DescriptorSet(scores.astype(np.float32), source_tag="scorematrix"),
    )


def benchmark(
    n_db: int,
    dim: int,
    n_queries: int = 200,
    seed: int = 0,
    params: ConeParams = ConeParams(),
) -> dict:
    """Measure per-query decision latency on random unit descriptors.

    Matching work depends on sizes, not values, so random vectors measure
    the same code path a real run takes: one distance row, one nearest
    neighbor, one score row, one decision per query.
    """
    if n_db < 1 or dim < 1 or n_queries < 1:
        raise ValueError("benchmark sizes must be >= 1")
    rng = np.random.default_rng(seed)
    db = rng.standard_normal((n_db, dim)).astype(np.float32)
    queries = rng.standard_normal((n_queries, dim)).astype(np.float32)
    matcher = OnlineMatcher(db, params)
    for row in queries:
        matcher.push(row)
    ms = np.asarray(matcher.push_seconds) * 1000.0
    return {
        "n_db": n_db,
        "dim": dim,
        "n_queries": n_queries,
        "mean_ms": float(ms.mean()),
        "median_ms": float(np.median(ms)),
        "p95_ms": float(np.percentile(ms, 95)),
        "max_ms": float(ms.max()),
    }
