"""Online sequence matching against a descriptor database.

Each incoming query descriptor is compared to every database descriptor
(cosine distance), its nearest neighbor is cached, and a velocity-cone
consistency score over the last ``n_q`` nearest neighbors is computed for
every candidate database index. A candidate j scores high when the recent
nearest-neighbor trail could plausibly be a traversal ending at j with a
frame-rate ratio between ``v_min`` and ``v_max``, in either direction of
travel. The best candidate is accepted only if its score clears a floor and
beats everything outside a local window by a ratio margin.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .descriptors import DescriptorSet

ACCEPTED = "accepted"
REJECTED = "rejected"

REASON_WARMUP = "warmup"
REASON_BELOW_MIN_SCORE = "below_min_score"
REASON_NOT_UNIQUE = "not_unique"

DIRECTIONS = ("both", "forward", "reverse")


@dataclass(frozen=True)
class ConeParams:
    """Sequential-matching knobs.

    ``v_min``/``v_max`` bound the admissible query-to-database frame-rate
    ratio, ``n_q`` is the trail length, and a candidate is unique when its
    score exceeds the best score further than ``uniqueness_window`` indices
    away by at least ``uniqueness_ratio``.
    """

    n_q: int = 10
    v_min: float = 0.4
    v_max: float = 2.5
    uniqueness_window: int = 10
    uniqueness_ratio: float = 1.11
    min_score: float = 0.3
    direction: str = "both"

    def __post_init__(self) -> None:
        if self.n_q < 1:
            raise ValueError(f"n_q must be >= 1, got {self.n_q}")
        if not 0 < self.v_min <= self.v_max:
            raise ValueError(
                f"need 0 < v_min <= v_max, got v_min={self.v_min} v_max={self.v_max}"
            )
        if self.uniqueness_window < 0:
            raise ValueError(f"uniqueness_window must be >= 0: {self.uniqueness_window}")
        if self.uniqueness_ratio < 1:
            raise ValueError(f"uniqueness_ratio must be >= 1: {self.uniqueness_ratio}")
        if not 0 <= self.min_score <= 1:
            raise ValueError(f"min_score must be in [0, 1]: {self.min_score}")
        if self.direction not in DIRECTIONS:
            raise ValueError(f"direction must be one of {DIRECTIONS}: {self.direction!r}")


@dataclass(frozen=True)
class MatchDecision:
    """Outcome for one query frame. ``db_index`` is set only on accept;
    ``score`` is the best cone score either way (0.0 during warmup)."""

    query_index: int
    status: str
    db_index: int | None
    score: float
    reject_reason: str | None = None

    @property
    def accepted(self) -> bool:
        return self.status == ACCEPTED


def _as_rows(descs: DescriptorSet | np.ndarray) -> np.ndarray:
    if isinstance(descs, DescriptorSet):
        arr = descs.values
    else:
        arr = np.asarray(descs, dtype=np.float32)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D descriptor array, got shape {arr.shape}")
    return arr


def _normalized_rows(arr: np.ndarray, label: str) -> np.ndarray:
    rows = arr.astype(np.float64)
    norms = np.linalg.norm(rows, axis=1)
    bad = np.flatnonzero(norms == 0)
    if bad.size:
        raise ValueError(f"{label} descriptor {bad[0]} has zero norm")
    return rows / norms[:, np.newaxis]


# distances below this are pure normalization roundoff (float64 eps scale);
# snapping them to zero makes identical descriptors exactly zero apart
_ROUNDOFF_SNAP = 1e-15


def _snap_zero(dist: np.ndarray) -> np.ndarray:
    out = np.maximum(dist, 0.0)
    out[out < _ROUNDOFF_SNAP] = 0.0
    return out


def build_distance_matrix(
    queries: DescriptorSet | np.ndarray, database: DescriptorSet | np.ndarray
) -> np.ndarray:
    """Pairwise cosine distances, shape (n_queries, n_db), clipped to >= 0.

    Identical descriptor rows come out exactly 0.0 apart.
    """
    q = _as_rows(queries)
    db = _as_rows(database)
    if q.shape[1] != db.shape[1]:
        raise ValueError(
            f"descriptor dimension mismatch: queries {q.shape[1]}, database {db.shape[1]}"
        )
    sims = _normalized_rows(q, "query") @ _normalized_rows(db, "database").T
    return _snap_zero(1.0 - sims)


def nearest_neighbor(distance_row: np.ndarray) -> int:
    """Index of the smallest distance; ties go to the smallest index."""
    row = np.asarray(distance_row)
    if row.ndim != 1 or row.size == 0:
        raise ValueError(f"distance row must be 1-D and non-empty, got shape {row.shape}")
    return int(np.argmin(row))


def cone_membership(k: int, j: int, j_prime: float, params: ConeParams) -> bool:
    """Whether a nearest neighbor ``j_prime`` seen ``k`` queries ago is
    consistent with the current frame sitting at database index ``j``.

    Bounds are real-valued and inclusive; at ``k == 0`` both travel
    directions collapse to requiring ``j_prime == j``.
    """
    if k < 0:
        raise ValueError(f"lag k must be >= 0, got {k}")
    forward = j - k * params.v_max <= j_prime <= j - k * params.v_min
    reverse = j + k * params.v_min <= j_prime <= j + k * params.v_max
    if params.direction == "forward":
        return bool(forward)
    if params.direction == "reverse":
        return bool(reverse)
    return bool(forward or reverse)


def score(i: int, j: int, nn_cache: np.ndarray | list[int], params: ConeParams) -> float:
    """Cone score of one query-database pair: the fraction of the last
    ``n_q`` nearest neighbors that sit inside the velocity cone of j."""
    if i < params.n_q - 1:
        raise ValueError(f"query {i} has fewer than n_q={params.n_q} neighbors cached")
    n_match = sum(
        cone_membership(k, j, nn_cache[i - k], params) for k in range(params.n_q)
    )
    return n_match / params.n_q


def score_row(i: int, nn_cache: np.ndarray, n_db: int, params: ConeParams) -> np.ndarray:
    """Cone scores of query ``i`` for every database index at once.

    ``nn_cache[t]`` must hold the nearest database index of query ``t`` for
    all ``t`` in ``[i - n_q + 1, i]``. Arithmetic mirrors
    :func:`cone_membership` term for term, so the two agree exactly.
    """
    if i < params.n_q - 1:
        raise ValueError(f"query {i} has fewer than n_q={params.n_q} neighbors cached")
    j = np.arange(n_db, dtype=np.float64)
    counts = np.zeros(n_db, dtype=np.int64)
    for k in range(params.n_q):
        m = float(nn_cache[i - k])
        forward = (j - k * params.v_max <= m) & (m <= j - k * params.v_min)
        reverse = (j + k * params.v_min <= m) & (m <= j + k * params.v_max)
        if params.direction == "forward":
            member = forward
        elif params.direction == "reverse":
            member = reverse
        else:
            member = forward | reverse
        counts += member
    return counts / params.n_q


def decide(i: int, scores: np.ndarray, params: ConeParams) -> MatchDecision:
    """Turn one score row into an accept/reject decision.

    The floor check runs before the uniqueness check, so a weak-but-unique
    best candidate still reports ``below_min_score``.
    """
    scores = np.asarray(scores, dtype=np.float64)
    best = int(np.argmax(scores))
    best_score = float(scores[best])
    if best_score < params.min_score:
        return MatchDecision(i, REJECTED, None, best_score, REASON_BELOW_MIN_SCORE)
    outside = np.abs(np.arange(scores.size) - best) > params.uniqueness_window
    runner_up = float(scores[outside].max()) if outside.any() else 0.0
    if runner_up == 0.0 or best_score / runner_up >= params.uniqueness_ratio:
        return MatchDecision(i, ACCEPTED, best, best_score, None)
    return MatchDecision(i, REJECTED, None, best_score, REASON_NOT_UNIQUE)


class OnlineMatcher:
    """Feed query descriptors one at a time; get one decision per frame.

    Keeps the growing nearest-neighbor trail plus per-query distance and
    score rows (warmup queries get all-zero score rows). ``push`` also
    records its own wall-clock cost so benchmarks measure exactly the
    matching work, not image I/O around it.
    """

    def __init__(
        self, database: DescriptorSet | np.ndarray, params: ConeParams = ConeParams()
    ):
        self.params = params
        self._db = _normalized_rows(_as_rows(database), "database")
        self.n_db = self._db.shape[0]
        self.nn_cache: list[int] = []
        self.decisions: list[MatchDecision] = []
        self._distance_rows: list[np.ndarray] = []
        self._score_rows: list[np.ndarray] = []
        self.push_seconds: list[float] = []

    def push(self, descriptor: np.ndarray) -> MatchDecision:
        started = time.perf_counter()
        vec = np.asarray(descriptor, dtype=np.float64).reshape(-1)
        if vec.shape[0] != self._db.shape[1]:
            raise ValueError(
                f"descriptor dimension {vec.shape[0]} does not match database "
                f"{self._db.shape[1]}"
            )
        norm = np.linalg.norm(vec)
        if norm == 0:
            raise ValueError("query descriptor has zero norm")
        dist = _snap_zero(1.0 - self._db @ (vec / norm))
        i = len(self.nn_cache)
        self.nn_cache.append(nearest_neighbor(dist))
        self._distance_rows.append(dist)
        if i < self.params.n_q - 1:
            decision = MatchDecision(i, REJECTED, None, 0.0, REASON_WARMUP)
            self._score_rows.append(np.zeros(self.n_db))
        else:
            scores = score_row(i, np.asarray(self.nn_cache), self.n_db, self.params)
            self._score_rows.append(scores)
            decision = decide(i, scores, self.params)
        self.decisions.append(decision)
        self.push_seconds.append(time.perf_counter() - started)
        return decision

    @property
    def distance_matrix(self) -> np.ndarray:
        if not self._distance_rows:
            return np.zeros((0, self.n_db))
        return np.stack(self._distance_rows)

    @property
    def score_matrix(self) -> np.ndarray:
        if not self._score_rows:
            return np.zeros((0, self.n_db))
        return np.stack(self._score_rows)


def run_online(
    distances: np.ndarray, params: ConeParams = ConeParams()
) -> tuple[np.ndarray, list[MatchDecision]]:
    """Process a full distance matrix in query order.

    Returns the score matrix (warmup rows all zero) and one decision per
    query. Row i's scores depend only on distance rows 0..i, so appending
    future queries never changes earlier decisions.
    """
    dist = np.asarray(distances, dtype=np.float64)
    if dist.ndim != 2 or 0 in dist.shape:
        raise ValueError(f"distance matrix must be 2-D and non-empty, got {dist.shape}")
    if not np.all(np.isfinite(dist)) or dist.min() < 0:
        raise ValueError("distance matrix entries must be finite and >= 0")
    n_queries, n_db = dist.shape
    nn_cache: list[int] = []
    scores = np.zeros((n_queries, n_db))
    decisions = []
    for i in range(n_queries):
        nn_cache.append(nearest_neighbor(dist[i]))
        if i < params.n_q - 1:
            decisions.append(MatchDecision(i, REJECTED, None, 0.0, REASON_WARMUP))
            continue
        scores[i] = score_row(i, np.asarray(nn_cache), n_db, params)
        decisions.append(decide(i, scores[i], params))
    return scores, decisions


DECISION_FIELDS = ("query_index", "status", "db_index", "score", "reject_reason")


def write_decisions_csv(path: str | Path, decisions: list[MatchDecision]) -> None:
    """Write decisions with fixed formatting so identical runs produce
    byte-identical files."""
    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh)
        writer.writerow(DECISION_FIELDS)
        for d in decisions:
            writer.writerow([
                d.query_index,
                d.status,
                "" if d.db_index is None else d.db_index,
                f"{d.score:.6f}",
                d.reject_reason or "",
            ])


def read_decisions_csv(path: str | Path) -> list[MatchDecision]:
    decisions = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != list(DECISION_FIELDS):
            raise ValueError(
                f"{path}: expected header {','.join(DECISION_FIELDS)}, "
                f"got {reader.fieldnames}"
            )
        for row in reader:
            decisions.append(
                MatchDecision(
                    query_index=int(row["query_index"]),
                    status=row["status"],
                    db_index=int(row["db_index"]) if row["db_index"] else None,
                    score=float(row["score"]),
                    reject_reason=row["reject_reason"] or None,
                )
            )
    return decisions
