"""Sequence-based visual place recognition for panoramic annular imagery.

Pipeline stages: unwrap annular frames into panoramas, compute global
descriptors (built-in patch-normalized baseline, or externally computed
vectors via the binary interchange format), match query sequences online
with a velocity-cone sequential search, and evaluate decisions against
index or geographic ground truth.
"""

__version__ = "0.1.0"

from .descriptors import (
    DescriptorSet,
    SadConfig,
    aggregate,
    cosine_distance,
    describe_frame,
    describe_frames,
    sad_descriptor,
    split_panorama,
)
from .estimators import PanoramaUnwrapper, SadDescriptor, SequenceLocalizer
from .evaluation import (
    EvalConfig,
    GeoPoint,
    GroundTruth,
    GtEntry,
    Metrics,
    evaluate_f1,
    evaluate_geo,
    haversine_m,
    load_db_geo_csv,
    load_ground_truth_csv,
    write_db_geo_csv,
    write_ground_truth_csv,
)
from .geometry import AnnularCalibration, CalibrationError, load_calibration, polar_map, unwrap
from .images import bilinear_sample, list_frames, load_image, save_image, to_grayscale
from .interchange import (
    BadMagicError,
    InconsistentSizeError,
    InterchangeError,
    TruncatedFileError,
    read_descriptors,
    write_descriptors,
)
from .matching import (
    ConeParams,
    MatchDecision,
    OnlineMatcher,
    build_distance_matrix,
    cone_membership,
    decide,
    nearest_neighbor,
    read_decisions_csv,
    run_online,
    score,
    score_row,
    write_decisions_csv,
)
from .pipeline import PipelineConfig, RunReport, benchmark, load_config, run_pipeline
from .synthetic import db_geo_positions, gen_synthetic

__all__ = [
    "AnnularCalibration",
    "BadMagicError",
    "CalibrationError",
    "ConeParams",
    "DescriptorSet",
    "EvalConfig",
    "GeoPoint",
    "GroundTruth",
    "GtEntry",
    "InconsistentSizeError",
    "InterchangeError",
    "MatchDecision",
    "Metrics",
    "OnlineMatcher",
    "PanoramaUnwrapper",
    "PipelineConfig",
    "RunReport",
    "SadConfig",
    "SadDescriptor",
    "SequenceLocalizer",
    "TruncatedFileError",
    "aggregate",
    "benchmark",
    "bilinear_sample",
    "build_distance_matrix",
    "cone_membership",
    "cosine_distance",
    "db_geo_positions",
    "decide",
    "describe_frame",
    "describe_frames",
    "evaluate_f1",
    "evaluate_geo",
    "gen_synthetic",
    "haversine_m",
    "list_frames",
    "load_calibration",
    "load_config",
    "load_db_geo_csv",
    "load_ground_truth_csv",
    "load_image",
    "nearest_neighbor",
    "polar_map",
    "read_decisions_csv",
    "read_descriptors",
    "run_online",
    "run_pipeline",
    "sad_descriptor",
    "save_image",
    "score",
    "score_row",
    "split_panorama",
    "to_grayscale",
    "unwrap",
    "write_db_geo_csv",
    "write_decisions_csv",
    "write_descriptors",
    "write_ground_truth_csv",
]
