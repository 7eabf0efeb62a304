"""Built-in prototype shapes, centred at the origin with unit bounding-box diagonal."""

from __future__ import annotations

import numpy as np

from .geometry import PointSet


def _normalise(points: np.ndarray) -> PointSet:
    pts = points - 0.5 * (points.min(axis=0) + points.max(axis=0))
    return PointSet(pts / np.linalg.norm(np.ptp(pts, axis=0)))


def _along_polyline(segments: list[tuple[tuple[float, float], tuple[float, float]]], n: int) -> np.ndarray:
    seg = np.array(segments, dtype=float)  # (S, 2, 2)
    lengths = np.linalg.norm(seg[:, 1] - seg[:, 0], axis=1)
    cum = np.concatenate([[0.0], np.cumsum(lengths)])
    s = (np.arange(n) + 0.5) * cum[-1] / n
    k = np.searchsorted(cum, s, side="right") - 1
    u = (s - cum[k]) / lengths[k]
    return seg[k, 0] + u[:, None] * (seg[k, 1] - seg[k, 0])


def fish(n: int = 50) -> PointSet:
    """Outline of the classical fish curve ``(cos t - sin^2 t / sqrt 2, cos t sin t)``."""
    t = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False) + np.pi / n
    return _normalise(np.stack([np.cos(t) - np.sin(t) ** 2 / np.sqrt(2.0), np.cos(t) * np.sin(t)], axis=1))


def character(n: int = 50) -> PointSet:
    """Strokes of a simple tree-like glyph, sampled evenly along their length."""
    strokes = [
        ((-1.0, 0.4), (1.0, 0.4)),
        ((0.0, 1.0), (0.0, -1.0)),
        ((0.0, 0.35), (-0.9, -0.6)),
        ((0.0, 0.35), (0.8, -0.5)),
        ((-0.4, -0.35), (0.25, -0.35)),
    ]
    return _normalise(_along_polyline(strokes, n))


def torus_knot(n: int = 50, p: int = 2, q: int = 3) -> PointSet:
    t = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    r = 2.0 + np.cos(q * t)
    return _normalise(np.stack([r * np.cos(p * t), r * np.sin(p * t), -np.sin(q * t)], axis=1))


def random_cloud(n: int, dim: int = 3, seed: int = 0) -> PointSet:
    rng = np.random.default_rng(seed)
    return _normalise(rng.uniform(-1.0, 1.0, size=(n, dim)))


PROTOTYPES = {
    "fish": fish,
    "character": character,
    "torus_knot": torus_knot,
}


def get_prototype(name: str, n: int = 50) -> PointSet:
    try:
        return PROTOTYPES[name](n)
    except KeyError:
        raise ValueError(f"unknown prototype {name!r}; expected one of {', '.join(PROTOTYPES)}") from None
