"""Scoring match decisions against ground truth.

Two protocols are supported. The index protocol compares accepted database
indices to ground-truth indices with a tolerance and reports precision,
recall and F1. The geo protocol uses latitude/longitude: the false rate is
the fraction of accepted queries that were flagged as having no database
coverage, and the positive rate is the fraction landing within a metric
distance of the truth.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

from .matching import MatchDecision

EARTH_RADIUS_M = 6_371_000.0

GT_DB = "db"
GT_GEO = "geo"
GT_UNSEEN = "unseen"

PR_DENOMINATORS = ("all_queries", "positives")

FLAG_PRECISION_UNDEFINED = "precision_undefined"
FLAG_RECALL_UNDEFINED = "recall_undefined"
FLAG_NO_POSITIVES = "no_positives"


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lat) and math.isfinite(self.lon)):
            raise ValueError(f"non-finite coordinates: {self.lat}, {self.lon}")
        if not -90 <= self.lat <= 90:
            raise ValueError(f"latitude out of range: {self.lat}")


@dataclass(frozen=True)
class GtEntry:
    """Ground truth for one query: a database index, a bare position, or
    unseen (no database coverage). Unseen entries may still carry the
    position so the geo protocol can measure how far a wrong accept landed.
    """

    kind: str
    db_index: int | None = None
    point: GeoPoint | None = None

    def __post_init__(self) -> None:
        if self.kind not in (GT_DB, GT_GEO, GT_UNSEEN):
            raise ValueError(f"unknown ground truth kind: {self.kind!r}")
        if self.kind == GT_DB and (self.db_index is None or self.db_index < 0):
            raise ValueError(f"db entry needs a database index >= 0: {self.db_index}")
        if self.kind == GT_GEO and self.point is None:
            raise ValueError("geo entry needs a position")


@dataclass(frozen=True)
class GroundTruth:
    entries: tuple[GtEntry, ...]

    def __len__(self) -> int:
        return len(self.entries)

    def overlap_flags(self) -> list[bool]:
        return [e.kind != GT_UNSEEN for e in self.entries]

    def positions(self) -> list[GeoPoint | None]:
        return [e.point for e in self.entries]


@dataclass(frozen=True)
class EvalConfig:
    index_tolerance: int = 5
    distance_tolerance_m: float = 50.0
    pr_denominator: str = "all_queries"

    def __post_init__(self) -> None:
        if self.index_tolerance <= 0:
            raise ValueError(f"index_tolerance must be > 0: {self.index_tolerance}")
        if self.distance_tolerance_m <= 0:
            raise ValueError(
                f"distance_tolerance_m must be > 0: {self.distance_tolerance_m}"
            )
        if self.pr_denominator not in PR_DENOMINATORS:
            raise ValueError(
                f"pr_denominator must be one of {PR_DENOMINATORS}: "
                f"{self.pr_denominator!r}"
            )


@dataclass(frozen=True)
class Metrics:
    """Counts and rates from one evaluation.

    The index protocol fills tp/fp/fn and precision/recall/f1; the geo
    protocol fills positive_count, false_rate and positive_rate. Unused
    fields stay zero. ``flags`` names any 0/0 cases reported as 0.
    """

    tp: int = 0
    fp: int = 0
    fn: int = 0
    precision: float = 0.0
    recall: float = 0.0
    f1: float = 0.0
    positive_count: int = 0
    false_rate: float = 0.0
    positive_rate: float = 0.0
    flags: tuple[str, ...] = field(default_factory=tuple)


def evaluate_f1(
    decisions: list[MatchDecision], gt: GroundTruth, cfg: EvalConfig = EvalConfig()
) -> Metrics:
    """Index-tolerance protocol.

    Accepted within tolerance of a db-index truth counts as a true positive;
    any other accept is a false positive (including accepts on unseen
    queries). A rejected query with db-index truth is a false negative;
    rejected unseen queries are uncounted true negatives.
    """
    if len(decisions) != len(gt):
        raise ValueError(
            f"{len(decisions)} decisions vs {len(gt)} ground truth entries"
        )
    tp = fp = fn = 0
    for dec, entry in zip(decisions, gt.entries):
        if entry.kind == GT_GEO:
            raise ValueError(
                f"query {dec.query_index}: bare geo ground truth has no database "
                "index; use the geo protocol"
            )
        if dec.accepted:
            hit = (
                entry.kind == GT_DB
                and abs(dec.db_index - entry.db_index) <= cfg.index_tolerance
            )
            tp += hit
            fp += not hit
        elif entry.kind == GT_DB:
            fn += 1
    flags = []
    if tp + fp == 0:
        precision = 0.0
        flags.append(FLAG_PRECISION_UNDEFINED)
    else:
        precision = tp / (tp + fp)
    if tp + fn == 0:
        recall = 0.0
        flags.append(FLAG_RECALL_UNDEFINED)
    else:
        recall = tp / (tp + fn)
    # count form of the harmonic mean: exact on round fixtures like 8/2/2
    denom = 2 * tp + fp + fn
    f1 = 0.0 if denom == 0 else 2 * tp / denom
    return Metrics(
        tp=tp,
        fp=fp,
        fn=fn,
        precision=precision,
        recall=recall,
        f1=f1,
        positive_count=tp + fp,
        flags=tuple(flags),
    )


def evaluate_geo(
    decisions: list[MatchDecision],
    query_geo: list[GeoPoint | None],
    db_geo: list[GeoPoint],
    gt_overlap: list[bool],
    cfg: EvalConfig = EvalConfig(),
) -> Metrics:
    """Geographic protocol over accepted decisions ("positives").

    false_rate: fraction of positives whose query was flagged as having no
    database coverage. positive_rate: fraction landing within
    ``distance_tolerance_m`` (inclusive) of the query's true position, over
    all queries by default or over positives per ``cfg.pr_denominator``.
    A query with no recorded position can never count as within tolerance.
    """
    n = len(decisions)
    if len(query_geo) != n or len(gt_overlap) != n:
        raise ValueError(
            f"geo arrays must align with {n} decisions: "
            f"got {len(query_geo)} positions, {len(gt_overlap)} overlap flags"
        )
    accepted = [d for d in decisions if d.accepted]
    for d in accepted:
        if not 0 <= d.db_index < len(db_geo):
            raise ValueError(
                f"query {d.query_index} matched db index {d.db_index}, but only "
                f"{len(db_geo)} database positions given"
            )
    flags = []
    if not accepted:
        false_rate = 0.0
        flags.append(FLAG_NO_POSITIVES)
    else:
        false_count = sum(not gt_overlap[d.query_index] for d in accepted)
        false_rate = false_count / len(accepted)
    within = 0
    for d in accepted:
        pos = query_geo[d.query_index]
        if pos is None:
            continue
        if haversine_m(pos, db_geo[d.db_index]) <= cfg.distance_tolerance_m:
            within += 1
    if cfg.pr_denominator == "all_queries":
        positive_rate = within / n if n else 0.0
    else:
        positive_rate = within / len(accepted) if accepted else 0.0
    return Metrics(
        positive_count=len(accepted),
        false_rate=false_rate,
        positive_rate=positive_rate,
        flags=tuple(flags),
    )


def haversine_m(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in meters on a 6371 km sphere."""
    lat1, lon1 = math.radians(a.lat), math.radians(a.lon)
    lat2, lon2 = math.radians(b.lat), math.radians(b.lon)
    s = (
        math.sin((lat2 - lat1) / 2) ** 2
        + math.cos(lat1) * math.cos(lat2) * math.sin((lon2 - lon1) / 2) ** 2
    )
    return 2 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(s)))


GT_FIELDS = ("query_id", "kind", "db_index", "lat", "lon")


def write_ground_truth_csv(path: str | Path, gt: GroundTruth) -> None:
    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh)
        writer.writerow(GT_FIELDS)
        for qid, e in enumerate(gt.entries):
            writer.writerow([
                qid,
                e.kind,
                "" if e.db_index is None else e.db_index,
                "" if e.point is None else f"{e.point.lat:.8f}",
                "" if e.point is None else f"{e.point.lon:.8f}",
            ])


def load_ground_truth_csv(path: str | Path, n_db: int | None = None) -> GroundTruth:
    """Read per-query truth rows, ordered by query_id starting at 0."""
    entries: list[GtEntry] = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != list(GT_FIELDS):
            raise ValueError(
                f"{path}: expected header {','.join(GT_FIELDS)}, got {reader.fieldnames}"
            )
        for row in reader:
            qid = int(row["query_id"])
            if qid != len(entries):
                raise ValueError(
                    f"{path}: query ids must be 0..n-1 in order, got {qid} at "
                    f"row {len(entries)}"
                )
            kind = row["kind"]
            db_index = int(row["db_index"]) if row["db_index"] else None
            point = None
            if row["lat"] or row["lon"]:
                point = GeoPoint(float(row["lat"]), float(row["lon"]))
            entries.append(GtEntry(kind=kind, db_index=db_index, point=point))
    if n_db is not None:
        for qid, e in enumerate(entries):
            if e.db_index is not None and e.db_index >= n_db:
                raise ValueError(
                    f"{path}: query {qid} references db index {e.db_index}, "
                    f"database has {n_db} frames"
                )
    return GroundTruth(tuple(entries))


def write_db_geo_csv(path: str | Path, points: list[GeoPoint]) -> None:
    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh)
        writer.writerow(["db_id", "lat", "lon"])
        for i, p in enumerate(points):
            writer.writerow([i, f"{p.lat:.8f}", f"{p.lon:.8f}"])


def load_db_geo_csv(path: str | Path) -> list[GeoPoint]:
    points = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["db_id", "lat", "lon"]:
            raise ValueError(
                f"{path}: expected header db_id,lat,lon, got {reader.fieldnames}"
            )
        for row in reader:
            if int(row["db_id"]) != len(points):
                raise ValueError(f"{path}: db ids must be 0..n-1 in order")
            points.append(GeoPoint(float(row["lat"]), float(row["lon"])))
    return points


def metrics_table(m: Metrics) -> str:
    """Human-readable summary, one metric per line."""
    lines = [
        f"  true positives   {m.tp}",
        f"  false positives  {m.fp}",
        f"  false negatives  {m.fn}",
        f"  precision        {m.precision:.4f}",
        f"  recall           {m.recall:.4f}",
        f"  f1               {m.f1:.4f}",
        f"  positives        {m.positive_count}",
        f"  false rate       {m.false_rate:.4f}",
        f"  positive rate    {m.positive_rate:.4f}",
    ]
    if m.flags:
        lines.append(f"  flags            {','.join(m.flags)}")
    return "\n".join(lines)


def metrics_key_values(m: Metrics) -> str:
    """Machine-readable key=value lines."""
    pairs = [
        ("tp", m.tp),
        ("fp", m.fp),
        ("fn", m.fn),
        ("precision", f"{m.precision:.6f}"),
        ("recall", f"{m.recall:.6f}"),
        ("f1", f"{m.f1:.6f}"),
        ("positive_count", m.positive_count),
        ("false_rate", f"{m.false_rate:.6f}"),
        ("positive_rate", f"{m.positive_rate:.6f}"),
        ("flags", ",".join(m.flags)),
    ]
    return "\n".join(f"{k}={v}" for k, v in pairs)
