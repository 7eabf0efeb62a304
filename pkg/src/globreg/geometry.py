"""Point sets, transformation parameterisations and parameter-space boxes."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

PathLike = Union[str, Path]


@dataclass(frozen=True)
class PointSet:
    """An ordered set of 2D or 3D points.

    ``labels`` is optional per-point integer bookkeeping (synthetic data uses it
    to tag inliers with their prototype index and outliers with -1).
    """

    points: np.ndarray
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] not in (2, 3):
            raise ValueError(f"points must be an (n, 2) or (n, 3) array, got shape {pts.shape}")
        if pts.shape[0] < 1:
            raise ValueError("a point set needs at least one point")
        if not np.all(np.isfinite(pts)):
            raise ValueError("point coordinates must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if self.labels is not None:
            lab = np.array(self.labels, dtype=np.int64).reshape(-1)
            if lab.shape[0] != pts.shape[0]:
                raise ValueError("labels must have one entry per point")
            lab.setflags(write=False)
            object.__setattr__(self, "labels", lab)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]

    def diameter(self) -> float:
        """Length of the bounding-box diagonal."""
        return float(np.linalg.norm(self.points.max(axis=0) - self.points.min(axis=0)))


def read_points(path: PathLike) -> PointSet:
    """Read a whitespace-separated point file (``#`` starts a comment line)."""
    rows = []
    dim = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            coords = [float(tok) for tok in line.split()]
            if dim is None:
                dim = len(coords)
                if dim not in (2, 3):
                    raise ValueError(f"{path}:{lineno}: expected 2 or 3 coordinates, got {dim}")
            elif len(coords) != dim:
                raise ValueError(f"{path}:{lineno}: expected {dim} coordinates, got {len(coords)}")
            rows.append(coords)
    if not rows:
        raise ValueError(f"{path}: no points found")
    return PointSet(np.array(rows))


def write_points(path: PathLike, ps: PointSet, header: Optional[str] = None) -> None:
    with open(path, "w") as fh:
        if header:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
        for p in ps.points:
            fh.write(" ".join(repr(float(c)) for c in p) + "\n")


@dataclass(frozen=True)
class SearchBox:
    """Axis-aligned box ``[lower, upper]`` in transformation-parameter space."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.array(self.lower, dtype=np.float64).reshape(-1)
        hi = np.array(self.upper, dtype=np.float64).reshape(-1)
        if lo.shape != hi.shape or lo.size == 0:
            raise ValueError("lower and upper must be non-empty vectors of equal length")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("box bounds must be finite")
        if np.any(lo > hi):
            raise ValueError("lower must not exceed upper in any dimension")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def ndim(self) -> int:
        return self.lower.size

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def volume(self) -> float:
        return float(np.prod(self.widths))

    def contains(self, theta, tol: float = 0.0) -> bool:
        theta = np.asarray(theta, dtype=np.float64)
        return bool(np.all(theta >= self.lower - tol) and np.all(theta <= self.upper + tol))


def box_vertices(box: SearchBox) -> np.ndarray:
    """All ``2**n`` corners of ``box`` as rows of an array.

    Row ``r`` takes the upper bound in dimension ``k`` iff bit ``k`` of ``r`` is
    set. Zero-width edges produce repeated rows; they are kept so the ordering
    never depends on the box widths.
    """
    n = box.ndim
    bits = (np.arange(2**n)[:, None] >> np.arange(n)[None, :]) & 1
    return np.where(bits == 1, box.upper[None, :], box.lower[None, :])


def bisect_longest_edge(box: SearchBox) -> tuple[SearchBox, SearchBox]:
    """Split ``box`` at the midpoint of its longest edge (lowest index on ties)."""
    w = box.widths
    k = int(np.argmax(w))
    if w[k] <= 0.0:
        raise ValueError("cannot bisect a box whose edges all have zero width")
    mid = 0.5 * (box.lower[k] + box.upper[k])
    upper1 = box.upper.copy()
    upper1[k] = mid
    lower2 = box.lower.copy()
    lower2[k] = mid
    return SearchBox(box.lower, upper1), SearchBox(lower2, box.upper)


def jacobian2d(x) -> np.ndarray:
    """Matrix ``J`` with ``J @ theta`` the similarity image of the 2D point ``x``."""
    x1, x2 = float(x[0]), float(x[1])
    return np.array([[x1, -x2, 1.0, 0.0], [x2, x1, 0.0, 1.0]])


def apply_similarity(theta, x) -> np.ndarray:
    return jacobian2d(x) @ np.asarray(theta, dtype=np.float64)


@dataclass(frozen=True)
class Transform2DSimilarity:
    """Similarity ``x -> s R(phi) x + t`` stored as ``(s cos phi, s sin phi, tx, ty)``."""

    theta: np.ndarray

    def __post_init__(self):
        th = np.array(self.theta, dtype=np.float64).reshape(-1)
        if th.shape != (4,):
            raise ValueError("a 2D similarity has exactly four parameters")
        th.setflags(write=False)
        object.__setattr__(self, "theta", th)

    @classmethod
    def from_params(cls, scale: float, angle: float, translation) -> "Transform2DSimilarity":
        tx, ty = translation
        return cls(np.array([scale * np.cos(angle), scale * np.sin(angle), tx, ty]))

    @property
    def scale(self) -> float:
        return float(np.hypot(self.theta[0], self.theta[1]))

    @property
    def angle(self) -> float:
        return float(np.arctan2(self.theta[1], self.theta[0]))

    @property
    def matrix(self) -> np.ndarray:
        a, b = self.theta[0], self.theta[1]
        return np.array([[a, -b], [b, a]])

    @property
    def translation(self) -> np.ndarray:
        return self.theta[2:].copy()

    def apply(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64)
        return pts @ self.matrix.T + self.theta[2:]


@dataclass(frozen=True)
class Transform3DRigid:
    """Rigid motion ``x -> R (x + t)``.

    The translation acts before the rotation, which is the order in which the
    rotation-invariant translation search recovers the two parts.
    """

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        R = np.array(self.rotation, dtype=np.float64)
        t = np.array(self.translation, dtype=np.float64).reshape(-1)
        if R.shape != (3, 3) or t.shape != (3,):
            raise ValueError("rotation must be 3x3 and translation length 3")
        if not np.allclose(R @ R.T, np.eye(3), atol=1e-9) or abs(np.linalg.det(R) - 1.0) > 1e-9:
            raise ValueError("rotation must be orthonormal with determinant +1")
        R.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    def apply(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64)
        return (pts + self.translation) @ self.rotation.T


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Rotation drawn uniformly from SO(3) via a normalised Gaussian quaternion."""
    q = rng.standard_normal(4)
    q /= np.linalg.norm(q)
    return quaternion_to_matrix(q)


def quaternion_to_matrix(q) -> np.ndarray:
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )

