"""Trajectory metrics computed from executed pose traces."""

from __future__ import annotations

import numpy as np

from ..errors import ValidationError


def point_segment_distance(points: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distance from each point (N,2) to the segment a-b."""
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return np.hypot(*(points - a).T)
    t = np.clip((points - a) @ ab / denom, 0.0, 1.0)
    proj = a + t[:, None] * ab
    return np.hypot(*(points - proj).T)


def trajectory_deviation_cm(executed_xy: np.ndarray, reference_xy: np.ndarray) -> float:
    """Mean distance from executed samples to the reference polyline, in cm.

    Each executed point is matched to its nearest reference segment; the
    mean of those distances is the course deviation.
    """
    executed = np.asarray(executed_xy, dtype=np.float64)
    reference = np.asarray(reference_xy, dtype=np.float64)
    if executed.ndim != 2 or executed.shape[1] != 2 or executed.shape[0] == 0:
        raise ValidationError("executed path must be a non-empty (N, 2) array")
    if reference.ndim != 2 or reference.shape[1] != 2 or reference.shape[0] < 2:
        raise ValidationError("reference polyline needs at least two (x, y) points")
    if not (np.isfinite(executed).all() and np.isfinite(reference).all()):
        raise ValidationError("paths must be finite")

    best = np.full(executed.shape[0], np.inf)
    for a, b in zip(reference[:-1], reference[1:]):
        np.minimum(best, point_segment_distance(executed, a, b), out=best)
    return float(best.mean() * 100.0)


def path_length_m(xy: np.ndarray) -> float:
    pts = np.asarray(xy, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
        return 0.0
    return float(np.hypot(*np.diff(pts, axis=0).T).sum())
