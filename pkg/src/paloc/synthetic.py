"""Synthetic descriptor sequences with known ground truth.

The database is a smooth random walk on the unit sphere in descriptor
space, so neighboring frames are similar and distant frames are not, the
same shape real traversals produce. Queries revisit a leading segment of
that walk at a configurable velocity with additive noise; the rest of the
query sequence is fresh random vectors with no database counterpart.

The unseen block comes first in query order. A matcher trail that has been
tracking the database would otherwise spill velocity-consistent history
into the first unseen queries and make some of them look matchable; putting
the unseen block first moves that seam cost onto the first few overlapping
queries, where a short warmup-like dent is expected and harmless.

Random unseen vectors are not enough on their own: at desk scale (a few
hundred database frames) the velocity cones cover a sizable fraction of the
index range, and an unconstrained random nearest-neighbor run produces an
accepted coincidence for roughly half the unseen queries. The generator
therefore assembles the unseen block one vector at a time, drawing fresh
random unit vectors but keeping one only if its realized nearest neighbor
leaves every scoring window it touches below the acceptance floor. The
kept vectors are ordinary random directions, far from every database frame;
only their nearest-neighbor pattern is curated. A final pass runs the
matcher with the planning parameters and verifies no unseen query is
accepted, so fixed seeds give both determinism and a hard no-false-accept
guarantee.
"""

from __future__ import annotations

import numpy as np

from .descriptors import DescriptorSet
from .evaluation import EARTH_RADIUS_M, GT_DB, GT_UNSEEN, GeoPoint, GroundTruth, GtEntry
from .matching import ConeParams, build_distance_matrix, run_online, score_row

WALK_STEP = 0.15

GEO_ORIGIN_LAT = 30.0
GEO_ORIGIN_LON = 120.0
GEO_SPACING_M = 10.0
GEO_UNSEEN_LON_OFFSET = 0.05

# sentinel nearest-neighbor index for not-yet-placed positions; far outside
# every cone interval so it never counts as a match
_UNPLACED = -(10 ** 6)

_MAX_DRAWS_PER_POSITION = 2000

# capacity slack: placement is a random search, so demand this much headroom
# over the bare pigeonhole bound before even trying
_CAPACITY_SLACK = 1.75
_ASSEMBLY_RESTARTS = 3


def _unit(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def _smooth_walk(rng: np.random.Generator, n: int, dim: int) -> np.ndarray:
    frames = np.empty((n, dim))
    frames[0] = _unit(rng, dim)
    for t in range(1, n):
        step = _unit(rng, dim) * WALK_STEP
        v = frames[t - 1] + step
        frames[t] = v / np.linalg.norm(v)
    return frames


def _lat_step_deg() -> float:
    return GEO_SPACING_M / EARTH_RADIUS_M * 180.0 / np.pi


def _shadow_total(params: ConeParams) -> int:
    """How many database indices one trail entry can lend cone support to,
    summed over all lags.

    Every anchor contributes its full stack mass somewhere, so keeping all
    stacks at or below the allowed height is impossible (pigeonhole) unless
    ``allowed * n_db`` exceeds this total.
    """
    total = 1  # k=0: both cones collapse onto a single index
    for k in range(1, params.n_q):
        lo = int(np.ceil(params.v_min * k))
        hi = int(np.floor(params.v_max * k))
        total += 2 * max(0, hi - lo + 1)
    return total


def _assemble_unseen(
    rng: np.random.Generator, db: np.ndarray, n_unseen: int, params: ConeParams
) -> np.ndarray:
    """Draw random unit vectors whose nearest-neighbor run stays below the
    acceptance floor in every scoring window inside the unseen block.

    A window of all-random neighbors routinely stacks enough cone hits on
    one candidate to clear min_score, so each draw is kept only if the
    highest stack in the windows it touches stays at least one hit under
    the floor. Draws are cheap; a few tries per position suffice.
    """
    n_db, dim = db.shape
    allowed = int(np.ceil(params.min_score * params.n_q)) - 1
    if allowed < 1:
        raise ValueError(
            "planning parameters leave no room for an unseen segment "
            f"(min_score {params.min_score} with n_q {params.n_q})"
        )
    # nearest neighbors computed exactly as the matcher will see them:
    # float32 storage, float64 normalized arithmetic
    stored = db.astype(np.float32).astype(np.float64)
    dbn = stored / np.linalg.norm(stored, axis=1)[:, np.newaxis]
    anchors = np.full(n_unseen, _UNPLACED, dtype=np.int64)
    rows = np.empty((n_unseen, dim))
    for m in range(n_unseen):
        placed = False
        for _ in range(_MAX_DRAWS_PER_POSITION):
            v = _unit(rng, dim)
            q = v.astype(np.float32).astype(np.float64)
            anchors[m] = int(np.argmin(1.0 - dbn @ (q / np.linalg.norm(q))))
            first = max(m, params.n_q - 1)
            last = min(m + params.n_q - 1, n_unseen - 1)
            fits = True
            for e in range(first, last + 1):
                stacks = score_row(e, anchors[: e + 1], n_db, params)
                if stacks.max() * params.n_q > allowed:
                    fits = False
                    break
            if fits:
                rows[m] = v
                placed = True
                break
        if not placed:
            raise RuntimeError(
                f"could not place unseen query {m} of {n_unseen} against "
                f"{n_db} database frames; parameters leave too little index space"
            )
    return rows


def db_geo_positions(n_db: int) -> list[GeoPoint]:
    """Database frames on a straight northward line, 10 m apart."""
    dlat = _lat_step_deg()
    return [GeoPoint(GEO_ORIGIN_LAT + i * dlat, GEO_ORIGIN_LON) for i in range(n_db)]


def gen_synthetic(
    n_db: int,
    overlap: float,
    velocity: float,
    noise: float,
    dim: int,
    seed: int,
    planning: ConeParams = ConeParams(),
) -> tuple[DescriptorSet, DescriptorSet, GroundTruth]:
    """Build (database, queries, ground truth) with the layout described in
    the module docstring.

    ``overlap`` is the fraction of queries that revisit the database;
    ``velocity`` is the query-to-database frame-rate ratio over the revisited
    segment and must lie inside the planning cone for the instance to be
    solvable. ``noise`` is the norm of the perturbation added to each
    overlapping query before renormalization.
    """
    if n_db < 2 or dim < 2:
        raise ValueError(f"need n_db >= 2 and dim >= 2, got {n_db}, {dim}")
    if not 0 < overlap <= 1:
        raise ValueError(f"overlap must be in (0, 1], got {overlap}")
    if not planning.v_min <= velocity <= planning.v_max:
        raise ValueError(
            f"velocity {velocity} outside planning cone "
            f"[{planning.v_min}, {planning.v_max}]; instance would be unsolvable"
        )
    if noise < 0:
        raise ValueError(f"noise must be >= 0, got {noise}")

    rng = np.random.default_rng(seed)
    db = _smooth_walk(rng, n_db, dim)

    n_overlap_db = int(round(n_db * overlap))
    if n_overlap_db < 2:
        raise ValueError(
            f"overlap segment has {n_overlap_db} frames; increase n_db or overlap"
        )
    n_oq = int(np.floor((n_overlap_db - 1) / velocity)) + 1
    n_unseen = int(round(n_oq * (1 - overlap) / overlap))
    if n_unseen:
        allowed = int(np.ceil(planning.min_score * planning.n_q)) - 1
        if allowed >= 1:
            needed = int(np.ceil(_CAPACITY_SLACK * _shadow_total(planning) / allowed))
            if n_db < needed:
                raise ValueError(
                    f"n_db={n_db} is too small to host guaranteed-rejected "
                    f"unseen queries under these cone parameters; "
                    f"use n_db >= {needed} or overlap=1"
                )

    geo = db_geo_positions(n_db)
    dlat = _lat_step_deg()

    overlap_rows = np.empty((n_oq, dim))
    overlap_entries = []
    for t in range(n_oq):
        pos = t * velocity
        a = int(np.floor(pos))
        frac = pos - a
        if frac == 0 or a + 1 >= n_overlap_db:
            x = db[a]
        else:
            x = db[a] + frac * (db[a + 1] - db[a])
            x = x / np.linalg.norm(x)
        if noise > 0:
            x = x + _unit(rng, dim) * noise
            x = x / np.linalg.norm(x)
        overlap_rows[t] = x
        gt_index = int(round(pos))
        overlap_entries.append(GtEntry(GT_DB, db_index=gt_index, point=geo[gt_index]))

    if n_unseen:
        # greedy placement can wedge itself into a corner; restart on a
        # fresh stretch of the stream rather than fail outright
        for attempt in range(_ASSEMBLY_RESTARTS):
            try:
                unseen_rows = _assemble_unseen(rng, db, n_unseen, planning)
                break
            except RuntimeError:
                if attempt == _ASSEMBLY_RESTARTS - 1:
                    raise
    else:
        unseen_rows = np.empty((0, dim))
    unseen_entries = [
        GtEntry(
            GT_UNSEEN,
            point=GeoPoint(
                GEO_ORIGIN_LAT + m * dlat, GEO_ORIGIN_LON + GEO_UNSEEN_LON_OFFSET
            ),
        )
        for m in range(n_unseen)
    ]

    queries = np.concatenate([unseen_rows, overlap_rows])
    db_set = DescriptorSet(db.astype(np.float32), source_tag="synthetic-db")
    query_set = DescriptorSet(queries.astype(np.float32), source_tag="synthetic-query")

    if n_unseen:
        # the window constraint above already forces rejection; verify
        _, decisions = run_online(build_distance_matrix(query_set, db_set), planning)
        accepted = [d.query_index for d in decisions[:n_unseen] if d.accepted]
        if accepted:
            raise RuntimeError(
                f"unseen queries {accepted} came out accepted despite the "
                "window constraint; this indicates a scoring change"
            )

    gt = GroundTruth(tuple(unseen_entries + overlap_entries))
    return db_set, query_set, gt
