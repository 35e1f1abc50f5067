from __future__ import annotations

import numpy as np
import pytest

from paloc.evaluation import GT_DB, GT_UNSEEN, haversine_m
from paloc.matching import ConeParams, build_distance_matrix, run_online
from paloc.synthetic import GEO_SPACING_M, db_geo_positions, gen_synthetic


def test_deterministic_per_seed():
    a_db, a_q, a_gt = gen_synthetic(200, 0.6, 1.0, 0.05, 64, seed=4)
    b_db, b_q, b_gt = gen_synthetic(200, 0.6, 1.0, 0.05, 64, seed=4)
    assert np.array_equal(a_db.values, b_db.values)
    assert np.array_equal(a_q.values, b_q.values)
    assert a_gt == b_gt
    c_db, _, _ = gen_synthetic(200, 0.6, 1.0, 0.05, 64, seed=5)
    assert not np.array_equal(a_db.values, c_db.values)


def test_query_counts_follow_overlap():
    db, queries, gt = gen_synthetic(200, 0.6, 1.0, 0.05, 64, seed=0)
    assert len(db) == 200
    kinds = [e.kind for e in gt.entries]
    assert kinds.count(GT_DB) == 120
    assert kinds.count(GT_UNSEEN) == 80
    assert len(queries) == 200


def test_half_overlap_means_half_unseen():
    _, _, gt = gen_synthetic(200, 0.5, 1.0, 0.05, 64, seed=1)
    kinds = [e.kind for e in gt.entries]
    assert kinds.count(GT_DB) == kinds.count(GT_UNSEEN) == 100


def test_unseen_block_comes_first():
    _, _, gt = gen_synthetic(180, 0.6, 1.0, 0.05, 64, seed=2)
    kinds = [e.kind for e in gt.entries]
    n_unseen = kinds.count(GT_UNSEEN)
    assert n_unseen == 72
    assert all(k == GT_UNSEEN for k in kinds[:n_unseen])
    assert all(k == GT_DB for k in kinds[n_unseen:])


def test_full_overlap_has_no_unseen():
    _, queries, gt = gen_synthetic(60, 1.0, 1.0, 0.05, 64, seed=3)
    assert all(e.kind == GT_DB for e in gt.entries)
    assert len(queries) == 60


def test_velocity_resamples_gt_indices():
    _, _, gt = gen_synthetic(60, 1.0, 2.0, 0.0, 64, seed=4)
    indices = [e.db_index for e in gt.entries]
    assert indices == list(range(0, 60, 2))


def test_noiseless_unit_velocity_gives_exact_zero_diagonal():
    db, queries, gt = gen_synthetic(50, 1.0, 1.0, 0.0, 64, seed=5)
    d = build_distance_matrix(queries, db)
    assert np.all(np.diag(d) == 0.0)


def test_every_entry_carries_a_position():
    _, _, gt = gen_synthetic(180, 0.6, 1.0, 0.05, 64, seed=6)
    assert all(e.point is not None for e in gt.entries)
    db_lons = {e.point.lon for e in gt.entries if e.kind == GT_DB}
    unseen_lons = {e.point.lon for e in gt.entries if e.kind == GT_UNSEEN}
    assert db_lons.isdisjoint(unseen_lons)


def test_unseen_queries_are_never_accepted():
    params = ConeParams()
    for seed in (0, 5):
        db, queries, gt = gen_synthetic(180, 0.6, 1.0, 0.05, 64, seed=seed)
        d = build_distance_matrix(queries, db)
        _, decisions = run_online(d, params)
        for dec, entry in zip(decisions, gt.entries):
            if entry.kind == GT_UNSEEN:
                assert not dec.accepted


def test_parameter_validation():
    with pytest.raises(ValueError):
        gen_synthetic(1, 0.6, 1.0, 0.05, 64, seed=0)
    with pytest.raises(ValueError):
        gen_synthetic(50, 0.0, 1.0, 0.05, 64, seed=0)
    with pytest.raises(ValueError):
        gen_synthetic(50, 1.5, 1.0, 0.05, 64, seed=0)
    with pytest.raises(ValueError):
        gen_synthetic(50, 0.6, 1.0, -0.1, 64, seed=0)
    with pytest.raises(ValueError, match="unsolvable"):
        gen_synthetic(50, 0.6, 5.0, 0.05, 64, seed=0)
    # small databases cannot host a guaranteed-rejected unseen block
    with pytest.raises(ValueError, match="too small"):
        gen_synthetic(100, 0.5, 1.0, 0.05, 64, seed=0)


def test_db_geo_positions_spacing():
    points = db_geo_positions(30)
    assert len(points) == 30
    for a, b in zip(points, points[1:]):
        assert abs(haversine_m(a, b) - GEO_SPACING_M) <= 1e-6
