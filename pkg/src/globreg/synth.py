"""Synthetic registration instances under five disturbance regimes.

Every severity is expressed in units of the prototype's bounding-box diagonal so
the same level means the same thing for any shape.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .geometry import (
    PathLike,
    PointSet,
    Transform2DSimilarity,
    Transform3DRigid,
    random_rotation,
    read_points,
    write_points,
)

REGIMES = ("deformation", "noise", "mixed_outliers", "separate_outliers", "occlusion_outliers")
OCCLUSION_OUTLIER_RATIO = 0.5
OUTLIER_REGION_INFLATION = 1.2
RBF_CENTERS = 5
RBF_BANDWIDTH = 0.5

Transform = Union[Transform2DSimilarity, Transform3DRigid]


@dataclass
class SynthConfig:
    regime: str
    level: float = 0.0
    seed: int = 0
    dims: int = 2
    scale_range: Optional[tuple[float, float]] = None  # default (0.5, 1.5) in 2D, (1, 1) in 3D
    translation_range: float = 0.5  # uniform in +-range * diameter per axis

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}; expected one of {', '.join(REGIMES)}")
        if not self.level >= 0:
            raise ValueError("level must be non-negative")
        if self.dims not in (2, 3):
            raise ValueError("dims must be 2 or 3")
        if self.scale_range is None:
            self.scale_range = (0.5, 1.5) if self.dims == 2 else (1.0, 1.0)
        lo, hi = self.scale_range
        if not 0 < lo <= hi:
            raise ValueError("scale_range must satisfy 0 < low <= high")
        if self.dims == 3 and (lo, hi) != (1.0, 1.0):
            raise ValueError("3D instances are rigid; scale_range must be (1, 1)")


@dataclass
class SynthInstance:
    source: PointSet
    target: PointSet
    ground_truth: Transform
    inlier_pairs: np.ndarray  # (K, 2) source/target index pairs
    config: SynthConfig
    scale: float = 1.0
    extras: dict = field(default_factory=dict)

    @property
    def n_p_truth(self) -> int:
        return int(self.inlier_pairs.shape[0])


def _bbox(points: np.ndarray, inflate: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = points.min(axis=0), points.max(axis=0)
    c, h = 0.5 * (lo + hi), 0.5 * (hi - lo) * inflate
    return c - h, c + h


def _uniform_in(rng: np.random.Generator, lo: np.ndarray, hi: np.ndarray, count: int) -> np.ndarray:
    return rng.uniform(lo, hi, size=(count, lo.size))


def _beside(rng: np.random.Generator, points: np.ndarray, count: int) -> np.ndarray:
    """Uniform points in a copy of the inflated bounding box placed next to it on a random side."""
    lo, hi = _bbox(points, OUTLIER_REGION_INFLATION)
    axis = rng.integers(points.shape[1])
    side = 1.0 if rng.random() < 0.5 else -1.0
    shift = np.zeros(points.shape[1])
    shift[axis] = side * (hi[axis] - lo[axis])
    return _uniform_in(rng, lo + shift, hi + shift, count)


def rbf_deform(rng: np.random.Generator, points: np.ndarray, magnitude: float) -> np.ndarray:
    """Smooth displacement: sum of Gaussian bumps with random centres and directions,
    rescaled so the largest displacement equals ``magnitude``."""
    if magnitude == 0:
        return points.copy()
    diam = float(np.linalg.norm(np.ptp(points, axis=0)))
    lo, hi = _bbox(points)
    centers = _uniform_in(rng, lo, hi, RBF_CENTERS)
    weights = rng.standard_normal((RBF_CENTERS, points.shape[1]))
    width = RBF_BANDWIDTH * diam
    d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=-1)
    disp = np.exp(-d2 / (2.0 * width**2)) @ weights
    peak = float(np.max(np.linalg.norm(disp, axis=1)))
    if peak > 0:
        disp *= magnitude / peak
    return points + disp


def _random_transform(rng: np.random.Generator, cfg: SynthConfig, diam: float) -> tuple[Transform, float]:
    lo, hi = cfg.scale_range
    scale = float(rng.uniform(lo, hi)) if hi > lo else float(lo)
    t = rng.uniform(-cfg.translation_range, cfg.translation_range, size=cfg.dims) * diam
    if cfg.dims == 2:
        return Transform2DSimilarity.from_params(scale, float(rng.uniform(0.0, 2.0 * math.pi)), t), scale
    return Transform3DRigid(random_rotation(rng), t), scale


def generate(prototype: PointSet, cfg: SynthConfig) -> SynthInstance:
    """Build a source/target pair from ``prototype`` under ``cfg``.

    The source is the prototype (occluded variants keep it whole); the target is
    the disturbed prototype mapped through a random ground-truth transform.
    Outliers are appended after the inliers, so inlier indices equal prototype
    indices in the source.
    """
    if prototype.dim != cfg.dims:
        raise ValueError(f"prototype is {prototype.dim}D but config asks for {cfg.dims}D")
    rng = np.random.default_rng(cfg.seed)
    proto = prototype.points
    n = proto.shape[0]
    diam = prototype.diameter()
    level = cfg.level

    kept = np.arange(n)
    shape = proto
    if cfg.regime == "deformation":
        shape = rbf_deform(rng, proto, level * diam)
    elif cfg.regime == "occlusion_outliers":
        n_occ = math.ceil(level * n - 1e-12)
        if n_occ >= n:
            raise ValueError(f"occlusion level {level} removes all {n} points")
        direction = rng.standard_normal(cfg.dims)
        direction /= np.linalg.norm(direction)
        proj = proto @ direction
        occluded = np.argsort(-proj, kind="stable")[:n_occ]
        kept = np.setdiff1d(np.arange(n), occluded)

    transform, scale = _random_transform(rng, cfg, diam)
    tgt_inliers = transform.apply(shape[kept])
    if cfg.regime == "noise" and level > 0:
        tgt_inliers = tgt_inliers + rng.normal(0.0, level * diam, size=tgt_inliers.shape)

    src_out = np.empty((0, cfg.dims))
    tgt_out = np.empty((0, cfg.dims))
    if cfg.regime == "mixed_outliers":
        count = int(round(level * n))
        src_out = _uniform_in(rng, *_bbox(proto, OUTLIER_REGION_INFLATION), count)
        tgt_out = _uniform_in(rng, *_bbox(tgt_inliers, OUTLIER_REGION_INFLATION), count)
    elif cfg.regime == "separate_outliers":
        count = int(round(level * n))
        src_out = _beside(rng, proto, count)
        tgt_out = _beside(rng, tgt_inliers, count)
    elif cfg.regime == "occlusion_outliers":
        count = int(round(OCCLUSION_OUTLIER_RATIO * n))
        src_out = _beside(rng, proto, count)
        tgt_out = _beside(rng, tgt_inliers, count)

    src_labels = np.concatenate([np.arange(n), np.full(len(src_out), -1)])
    tgt_labels = np.concatenate([kept, np.full(len(tgt_out), -1)])
    source = PointSet(np.vstack([proto, src_out]), src_labels)
    target = PointSet(np.vstack([tgt_inliers, tgt_out]), tgt_labels)
    pairs = np.stack([kept, np.arange(kept.size)], axis=1)
    return SynthInstance(source, target, transform, pairs, cfg, scale)


def truth_dict(inst: SynthInstance) -> dict:
    cfg = inst.config
    d = {
        "dims": cfg.dims,
        "regime": cfg.regime,
        "level": cfg.level,
        "seed": cfg.seed,
        "n_p_truth": inst.n_p_truth,
        "scale": inst.scale,
        "inlier_pairs": inst.inlier_pairs.tolist(),
    }
    gt = inst.ground_truth
    if isinstance(gt, Transform2DSimilarity):
        d["theta"] = gt.theta.tolist()
    else:
        d["rotation"] = gt.rotation.tolist()
        d["translation"] = gt.translation.tolist()
    return d


def write_instance(directory: PathLike, inst: SynthInstance) -> Path:
    """Write ``source.txt``, ``target.txt`` and the ``truth.json`` sidecar."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    write_points(out / "source.txt", inst.source)
    write_points(out / "target.txt", inst.target)
    with open(out / "truth.json", "w") as fh:
        json.dump(truth_dict(inst), fh, indent=1)
    return out


def read_truth(path: PathLike) -> dict:
    with open(path) as fh:
        d = json.load(fh)
    d["inlier_pairs"] = np.asarray(d["inlier_pairs"], dtype=np.int64).reshape(-1, 2)
    if "theta" in d:
        d["transform"] = Transform2DSimilarity(d["theta"])
    else:
        d["transform"] = Transform3DRigid(d["rotation"], d["translation"])
    return d


def read_instance(directory: PathLike) -> tuple[PointSet, PointSet, dict]:
    directory = Path(directory)
    return read_points(directory / "source.txt"), read_points(directory / "target.txt"), read_truth(
        directory / "truth.json"
    )
