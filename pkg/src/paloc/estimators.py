"""Estimator-style wrappers over the functional core.

These follow the fit/transform/predict conventions so the stages compose
with standard tooling: unwrapping and description are transformers over
lists of images, and the localizer is fitted on database descriptors and
predicts a database index (or -1) per query. All parameters are plain
constructor arguments, so get_params/set_params and cloning work.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .descriptors import SadConfig, describe_frame
from .geometry import AnnularCalibration, load_calibration, unwrap
from .matching import ConeParams, MatchDecision, OnlineMatcher


class PanoramaUnwrapper(TransformerMixin, BaseEstimator):
    """Unwrap annular frames into rectangular panoramas.

    ``calibration`` is an AnnularCalibration or a path to a calibration
    file. Input to transform is a list of HxW or HxWx3 arrays; output is the
    list of unwrapped panoramas.
    """

    def __init__(self, calibration=None, out_width=1920, aspect_ratio=4.8,
                 swap_axes=False):
        self.calibration = calibration
        self.out_width = out_width
        self.aspect_ratio = aspect_ratio
        self.swap_axes = swap_axes

    def _resolved(self) -> AnnularCalibration:
        if isinstance(self.calibration, AnnularCalibration):
            return self.calibration
        if self.calibration is None:
            raise ValueError("calibration is required (object or file path)")
        return load_calibration(self.calibration)

    def fit(self, X=None, y=None):
        self.calibration_ = self._resolved()
        return self

    def transform(self, X) -> list[np.ndarray]:
        if not hasattr(self, "calibration_"):
            self.fit()
        return [
            unwrap(
                np.asarray(img),
                self.calibration_,
                out_width=self.out_width,
                aspect_ratio=self.aspect_ratio,
                swap_axes=self.swap_axes,
            )
            for img in X
        ]


class SadDescriptor(TransformerMixin, BaseEstimator):
    """Turn panoramas into patch-normalized global descriptors.

    transform takes a list of images and returns an (n, dim) float32 array,
    one row per frame in input order.
    """

    def __init__(self, parts=4, aggregation="sum", thumb_width=64, thumb_height=16,
                 patch_size=8, part_order=None):
        self.parts = parts
        self.aggregation = aggregation
        self.thumb_width = thumb_width
        self.thumb_height = thumb_height
        self.patch_size = patch_size
        self.part_order = part_order

    def fit(self, X=None, y=None):
        self.sad_config_ = SadConfig(
            thumb_width=self.thumb_width,
            thumb_height=self.thumb_height,
            patch_size=self.patch_size,
        )
        return self

    def transform(self, X) -> np.ndarray:
        if not hasattr(self, "sad_config_"):
            self.fit()
        rows = [
            describe_frame(
                np.asarray(img),
                self.parts,
                self.aggregation,
                self.sad_config_,
                part_order=self.part_order,
            )
            for img in X
        ]
        if not rows:
            raise ValueError("no frames to describe")
        return np.stack(rows)


class SequenceLocalizer(BaseEstimator):
    """Online sequential place recognition against a fitted database.

    fit stores the database descriptors; predict runs the online matcher
    over the query rows in order and returns the accepted database index
    per query, with -1 for rejected queries. match returns the full
    decisions instead.
    """

    def __init__(self, n_q=10, v_min=0.4, v_max=2.5, uniqueness_window=10,
                 uniqueness_ratio=1.11, min_score=0.3, direction="both"):
        self.n_q = n_q
        self.v_min = v_min
        self.v_max = v_max
        self.uniqueness_window = uniqueness_window
        self.uniqueness_ratio = uniqueness_ratio
        self.min_score = min_score
        self.direction = direction

    def _params(self) -> ConeParams:
        return ConeParams(
            n_q=self.n_q,
            v_min=self.v_min,
            v_max=self.v_max,
            uniqueness_window=self.uniqueness_window,
            uniqueness_ratio=self.uniqueness_ratio,
            min_score=self.min_score,
            direction=self.direction,
        )

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64, ensure_min_samples=1)
        norms = np.linalg.norm(X, axis=1)
        if np.any(norms == 0):
            raise ValueError("database contains a zero-norm descriptor")
        self.cone_params_ = self._params()
        self.database_ = X
        self.n_features_in_ = X.shape[1]
        return self

    def match(self, X) -> list[MatchDecision]:
        check_is_fitted(self, "database_")
        X = check_array(X, dtype=np.float64, ensure_min_samples=1)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"queries have dimension {X.shape[1]}, database "
                f"{self.n_features_in_}"
            )
        matcher = OnlineMatcher(self.database_, self.cone_params_)
        for row in X:
            matcher.push(row)
        return matcher.decisions

    def predict(self, X) -> np.ndarray:
        decisions = self.match(X)
        return np.asarray(
            [d.db_index if d.accepted else -1 for d in decisions], dtype=np.int64
        )
