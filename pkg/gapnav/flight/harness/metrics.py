# PEP-8
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation, Slerp

from flight.sim import GapPose, geodesic_angle

from .errors import DegenerateDatasetError


TILT_BUCKETS: tuple[tuple[str, float, float], ...] = (
    ("0-30", 0.0, 30.0),
    ("30-60", 30.0, 60.0),
    ("60-80", 60.0, 90.0),
)


def tilt_bucket(tilt_deg: float) -> str:
    magnitude = abs(tilt_deg)
    for name, low, high in TILT_BUCKETS:
        if low <= magnitude < high:
            return name
    return TILT_BUCKETS[-1][0]


@dataclass(frozen=True)
class CrossingErrors:
    position_error: float
    attitude_error_deg: float
    fraction: float
    position: np.ndarray
    rotation: np.ndarray


def crossing_errors(
    pose: GapPose,
    p_before,
    r_before,
    p_after,
    r_after,
) -> CrossingErrors:
    """Errors at the plane crossing, interpolated between two straddling steps.

    Position is interpolated linearly and attitude by slerp, both at the
    fraction where the signed distance to the plane reaches zero.
    """
    p_before = np.asarray(p_before, dtype=np.float64)
    p_after = np.asarray(p_after, dtype=np.float64)
    d_before = -pose.to_local(p_before)[0]
    d_after = -pose.to_local(p_after)[0]
    span = d_before - d_after
    fraction = float(np.clip(d_before / span, 0.0, 1.0)) if span > 0 else 1.0

    position = p_before + fraction * (p_after - p_before)
    rotations = Rotation.from_matrix(np.stack([r_before, r_after]))
    rotation = Slerp([0.0, 1.0], rotations)([fraction]).as_matrix()[0]

    local = pose.to_local(position)
    return CrossingErrors(
        position_error=float(np.linalg.norm(local[1:3])),
        attitude_error_deg=math.degrees(geodesic_angle(pose.rotation, rotation)),
        fraction=fraction,
        position=position,
        rotation=rotation,
    )


@dataclass(frozen=True)
class PRCurve:
    thresholds: np.ndarray
    precision: np.ndarray
    recall: np.ndarray
    average_precision: float
    n_positive: int
    n_samples: int

    def rows(self) -> list[dict[str, float]]:
        return [
            {"threshold": float(t), "precision": float(p), "recall": float(r)}
            for t, p, r in zip(self.thresholds, self.precision, self.recall)
        ]


def precision_recall(labels, scores) -> PRCurve:
    """Precision and recall at every distinct score, highest threshold first.

    AP is the trapezoidal area under precision over recall, starting from a
    recall-0 point that carries the first precision.
    """
    labels = np.asarray(labels, dtype=np.float64)
    scores = np.asarray(scores, dtype=np.float64)
    if labels.shape != scores.shape or labels.ndim != 1:
        raise ValueError(f"labels {labels.shape} and scores {scores.shape} must be matching vectors")
    n_positive = int(labels.sum())
    if n_positive == 0 or n_positive == labels.size:
        raise DegenerateDatasetError(labels.size, n_positive)

    order = np.argsort(-scores, kind="mergesort")
    sorted_scores = scores[order]
    tp = np.cumsum(labels[order])
    fp = np.cumsum(1.0 - labels[order])
    # last index of every run of equal scores
    last = np.flatnonzero(np.r_[sorted_scores[1:] != sorted_scores[:-1], True])

    thresholds = sorted_scores[last]
    precision = tp[last] / (tp[last] + fp[last])
    recall = tp[last] / n_positive

    r = np.r_[0.0, recall]
    p = np.r_[precision[0], precision]
    ap = float(np.sum(np.diff(r) * (p[1:] + p[:-1]) / 2.0))
    return PRCurve(thresholds, precision, recall, ap, n_positive, labels.size)


def success_rate(flags) -> float:
    flags = list(flags)
    return sum(bool(f) for f in flags) / len(flags) if flags else float("nan")


def mean_or_nan(values) -> float:
    values = [v for v in values if v is not None and math.isfinite(v)]
    return float(np.mean(values)) if values else float("nan")
