"""Command line interface.

Subcommands mirror the pipeline stages so each phase can run alone:

    unwrap         annular frames -> rectangular panoramas
    describe       frame directory -> descriptor file
    match          two descriptor files -> decisions.csv
    evaluate       decisions + ground truth -> metrics
    run            full pipeline from a key=value config file
    gen-synthetic  write a synthetic dataset with known ground truth
    benchmark      per-query decision latency at a given scale
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .descriptors import DescriptorSet, SadConfig, describe_frame
from .evaluation import (
    EvalConfig,
    evaluate_f1,
    evaluate_geo,
    load_db_geo_csv,
    load_ground_truth_csv,
    metrics_key_values,
    metrics_table,
    write_db_geo_csv,
    write_ground_truth_csv,
)
from .geometry import load_calibration, unwrap
from .images import list_frames, load_image, save_image
from .interchange import read_descriptors, write_descriptors
from .matching import (
    ConeParams,
    OnlineMatcher,
    read_decisions_csv,
    write_decisions_csv,
)
from .parallel import map_ordered
from .pipeline import (
    benchmark,
    dump_matrices,
    load_config,
    parse_part_order,
    run_pipeline,
)
from .synthetic import db_geo_positions, gen_synthetic


def _add_cone_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--n-q", type=int, default=10,
                        help="sequence length of the matching trail")
    parser.add_argument("--v-min", type=float, default=0.4,
                        help="minimal query/database velocity ratio")
    parser.add_argument("--v-max", type=float, default=2.5,
                        help="maximal query/database velocity ratio")
    parser.add_argument("--uniqueness-window", type=int, default=10,
                        help="half-width of the index window excluded around the peak")
    parser.add_argument("--uniqueness-ratio", type=float, default=1.11,
                        help="required peak-to-runner-up score ratio")
    parser.add_argument("--min-score", type=float, default=0.3,
                        help="absolute score floor for acceptance")
    parser.add_argument("--direction", choices=("both", "forward", "reverse"),
                        default="both", help="traversal directions to consider")


def _cone_from_args(args: argparse.Namespace) -> ConeParams:
    return ConeParams(
        n_q=args.n_q,
        v_min=args.v_min,
        v_max=args.v_max,
        uniqueness_window=args.uniqueness_window,
        uniqueness_ratio=args.uniqueness_ratio,
        min_score=args.min_score,
        direction=args.direction,
    )


def cmd_unwrap(args: argparse.Namespace) -> int:
    calib = load_calibration(args.calibration)
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    src = Path(args.input)
    frames = [src] if src.is_file() else list_frames(src)

    def one(path: Path) -> None:
        pano = unwrap(
            load_image(path),
            calib,
            out_width=args.out_width,
            aspect_ratio=args.aspect_ratio,
            swap_axes=args.swap_axes,
        )
        save_image(out_dir / (path.stem + ".png"), pano)

    map_ordered(one, frames)
    print(f"unwrapped {len(frames)} frame(s) into {out_dir}")
    return 0


def cmd_describe(args: argparse.Namespace) -> int:
    frames = list_frames(Path(args.input))
    calib = load_calibration(args.calibration) if args.calibration else None
    cfg = SadConfig(
        thumb_width=args.thumb_width,
        thumb_height=args.thumb_height,
        patch_size=args.patch_size,
    )
    order = parse_part_order(args.reorder_parts, args.parts)

    def one(path: Path) -> np.ndarray:
        img = load_image(path)
        if calib is not None:
            img = unwrap(img, calib, out_width=args.out_width,
                         aspect_ratio=args.aspect_ratio)
        return describe_frame(img, args.parts, args.aggregation, cfg, part_order=order)

    rows = map_ordered(one, frames)
    descs = DescriptorSet(np.stack(rows), source_tag="sad")
    write_descriptors(args.output, descs)
    print(f"wrote {len(descs)} descriptors (dim {descs.dim}) to {args.output}")
    return 0


def cmd_match(args: argparse.Namespace) -> int:
    db = read_descriptors(args.database)
    queries = read_descriptors(args.query)
    matcher = OnlineMatcher(db, _cone_from_args(args))
    for row in queries.values:
        matcher.push(row)
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_decisions_csv(out_dir / "decisions.csv", matcher.decisions)
    if args.dump_matrices:
        dump_matrices(out_dir, matcher.distance_matrix, matcher.score_matrix)
    accepted = sum(d.accepted for d in matcher.decisions)
    print(f"{accepted}/{len(matcher.decisions)} queries accepted; "
          f"decisions in {out_dir / 'decisions.csv'}")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    decisions = read_decisions_csv(args.decisions)
    gt = load_ground_truth_csv(args.ground_truth)
    cfg = EvalConfig(
        index_tolerance=args.index_tolerance,
        distance_tolerance_m=args.distance_tolerance_m,
        pr_denominator=args.pr_denominator,
    )
    sections = []
    has_db_entries = any(e.kind == "db" for e in gt.entries)
    if has_db_entries:
        m = evaluate_f1(decisions, gt, cfg)
        print("index protocol")
        print(metrics_table(m))
        sections += ["[f1]", metrics_key_values(m)]
    if args.db_geo:
        db_geo = load_db_geo_csv(args.db_geo)
        m = evaluate_geo(decisions, gt.positions(), db_geo, gt.overlap_flags(), cfg)
        print("geo protocol")
        print(metrics_table(m))
        sections += ["[geo]", metrics_key_values(m)]
    if not sections:
        print("nothing to evaluate: ground truth has no db entries and no "
              "--db-geo given", file=sys.stderr)
        return 1
    if args.output:
        Path(args.output).write_text("\n".join(sections) + "\n")
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    report = run_pipeline(cfg)
    accepted = sum(d.accepted for d in report.decisions)
    print(f"{accepted}/{len(report.decisions)} queries accepted")
    print(f"describe: {report.describe_ms_total:.1f} ms total "
          f"({report.describe_ms_per_frame:.2f} ms/frame)")
    print(f"decision: median {report.decision_ms_median:.3f} ms, "
          f"mean {report.decision_ms_mean:.3f} ms")
    if report.metrics_f1 is not None:
        print("index protocol")
        print(metrics_table(report.metrics_f1))
    if report.metrics_geo is not None:
        print("geo protocol")
        print(metrics_table(report.metrics_geo))
    print(f"artifacts in {cfg.output_dir}")
    return 0


def cmd_gen_synthetic(args: argparse.Namespace) -> int:
    db, queries, gt = gen_synthetic(
        n_db=args.n_db,
        overlap=args.overlap,
        velocity=args.velocity,
        noise=args.noise,
        dim=args.dim,
        seed=args.seed,
    )
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_descriptors(out_dir / "db.pald", db)
    write_descriptors(out_dir / "queries.pald", queries)
    write_ground_truth_csv(out_dir / "ground_truth.csv", gt)
    write_db_geo_csv(out_dir / "db_geo.csv", db_geo_positions(args.n_db))
    unseen = sum(e.kind == "unseen" for e in gt.entries)
    print(f"wrote {len(db)} database and {len(queries)} query descriptors "
          f"({unseen} unseen) to {out_dir}")
    return 0


def cmd_benchmark(args: argparse.Namespace) -> int:
    result = benchmark(
        n_db=args.n_db, dim=args.dim, n_queries=args.queries, seed=args.seed,
        params=_cone_from_args(args),
    )
    print(f"database {result['n_db']} x dim {result['dim']}, "
          f"{result['n_queries']} queries")
    for key in ("mean_ms", "median_ms", "p95_ms", "max_ms"):
        print(f"  {key.replace('_ms', ''):<8} {result[key]:8.3f} ms")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="paloc",
        description="sequence-based place recognition for panoramic annular imagery",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("unwrap", help="unwrap annular frames into panoramas")
    p.add_argument("--input", required=True, help="annular image or directory")
    p.add_argument("--output", required=True, help="output directory")
    p.add_argument("--calibration", required=True, help="calibration file")
    p.add_argument("--out-width", type=int, default=1920)
    p.add_argument("--aspect-ratio", type=float, default=4.8)
    p.add_argument("--swap-axes", action="store_true",
                   help="use column-major image axis convention")
    p.set_defaults(func=cmd_unwrap)

    p = sub.add_parser("describe", help="compute descriptors for a frame directory")
    p.add_argument("--input", required=True, help="panorama (or annular) directory")
    p.add_argument("--output", required=True, help="descriptor file to write")
    p.add_argument("--calibration", default="",
                   help="calibration file; give it when inputs are annular")
    p.add_argument("--out-width", type=int, default=1920)
    p.add_argument("--aspect-ratio", type=float, default=4.8)
    p.add_argument("--parts", type=int, choices=(1, 2, 4), default=4)
    p.add_argument("--aggregation", choices=("sum", "concat"), default="sum")
    p.add_argument("--reorder-parts", default="",
                   help="'reverse' or a comma permutation, applied before aggregation")
    p.add_argument("--thumb-width", type=int, default=64)
    p.add_argument("--thumb-height", type=int, default=16)
    p.add_argument("--patch-size", type=int, default=8)
    p.set_defaults(func=cmd_describe)

    p = sub.add_parser("match", help="match query descriptors against a database")
    p.add_argument("--database", required=True, help="database descriptor file")
    p.add_argument("--query", required=True, help="query descriptor file")
    p.add_argument("--output-dir", required=True)
    p.add_argument("--dump-matrices", action="store_true",
                   help="also write distance and score matrices")
    _add_cone_args(p)
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("evaluate", help="score a decisions file against ground truth")
    p.add_argument("--decisions", required=True)
    p.add_argument("--ground-truth", required=True)
    p.add_argument("--db-geo", default="", help="database positions CSV")
    p.add_argument("--index-tolerance", type=int, default=5)
    p.add_argument("--distance-tolerance-m", type=float, default=50.0)
    p.add_argument("--pr-denominator", choices=("all_queries", "positives"),
                   default="all_queries")
    p.add_argument("--output", default="", help="also write key=value metrics here")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("run", help="run the full pipeline from a config file")
    p.add_argument("--config", required=True, help="key = value config file")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("gen-synthetic", help="write a synthetic dataset")
    p.add_argument("--output-dir", required=True)
    p.add_argument("--n-db", type=int, default=200)
    p.add_argument("--overlap", type=float, default=0.6)
    p.add_argument("--velocity", type=float, default=1.0)
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--dim", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gen_synthetic)

    p = sub.add_parser("benchmark", help="measure per-query decision latency")
    p.add_argument("--n-db", type=int, default=1000)
    p.add_argument("--dim", type=int, default=4096)
    p.add_argument("--queries", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    _add_cone_args(p)
    p.set_defaults(func=cmd_benchmark)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
