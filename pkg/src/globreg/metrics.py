"""Registration-quality metrics."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .geometry import PointSet


@dataclass
class EvalReport:
    rmse: float
    runtime_seconds: float
    iterations: int
    certificate: str
    translation_error: Optional[float] = None
    rotation_error_deg: Optional[float] = None

    def as_dict(self) -> dict:
        return asdict(self)

    def format(self) -> str:
        parts = [f"certificate={self.certificate}", f"iterations={self.iterations}"]
        for key in ("rmse", "translation_error", "rotation_error_deg", "runtime_seconds"):
            val = getattr(self, key)
            if val is not None:
                parts.append(f"{key}={val:.6g}")
        return " ".join(parts)


def rmse(transform, source: PointSet, target: PointSet, inlier_pairs) -> float:
    """Root mean squared distance between mapped source inliers and their targets.

    ``transform`` is anything with an ``apply(points)`` method.
    """
    pairs = np.asarray(inlier_pairs, dtype=np.int64).reshape(-1, 2)
    if pairs.shape[0] == 0:
        raise ValueError("rmse needs at least one inlier pair")
    mapped = transform.apply(source.points[pairs[:, 0]])
    diff = mapped - target.points[pairs[:, 1]]
    return float(np.sqrt(np.mean(np.sum(diff * diff, axis=1))))


def rotation_error_deg(r_est, r_true) -> float:
    """Angle of ``r_est @ r_true.T`` in degrees."""
    rel = np.asarray(r_est) @ np.asarray(r_true).T
    c = np.clip(0.5 * (np.trace(rel) - 1.0), -1.0, 1.0)
    return math.degrees(math.acos(c))


def translation_error(t_est, t_true) -> float:
    return float(np.linalg.norm(np.asarray(t_est, dtype=float) - np.asarray(t_true, dtype=float)))
