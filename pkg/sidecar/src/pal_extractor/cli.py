"""Command line interface: one subcommand-free extractor invocation."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .descriptor import ExtractorConfig, extract


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="extract",
        description="compute deep global descriptors for a frame directory "
        "and write them in the descriptor interchange format",
    )
    parser.add_argument("--input", required=True, help="frame directory")
    parser.add_argument("--output", required=True, help="descriptor file to write")
    parser.add_argument("--parts", type=int, choices=(1, 2, 4), default=4,
                        help="horizontal splits per frame")
    parser.add_argument("--size", type=int, default=224,
                        help="side length each split is resized to")
    parser.add_argument("--backbone", default="resnet18",
                        help="model identifier (resnet18/resnet34/resnet50, "
                        "optionally with :random)")
    parser.add_argument("--aggregation", choices=("sum", "concat"),
                        default="sum")
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = ExtractorConfig(
            input_dir=Path(args.input),
            output_file=Path(args.output),
            parts=args.parts,
            input_size=args.size,
            backbone=args.backbone,
            aggregation=args.aggregation,
        )
        report = extract(cfg)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    skipped = f", skipped {len(report.skipped)}" if report.skipped else ""
    print(f"wrote {report.count} descriptors (dim {report.dim}) "
          f"to {args.output}{skipped}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
