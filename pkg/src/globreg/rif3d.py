"""Rotation-free translation search on point norms, plus rotation recovery.

For ``y_j = R (x_i + t)`` the norms agree, ``||x_i + t|| = ||y_j||``, whatever
``R`` is. The pairwise cost ``(||x_i + t|| - ||y_j||)^2`` expands into the convex
``||x_i + t||^2`` plus the concave ``-2 ||y_j|| ||x_i + t|| + ||y_j||^2``.
"""

from __future__ import annotations

import numpy as np

from .dcbound import CostModel
from .geometry import PointSet, SearchBox, Transform3DRigid
from .klap import solve_klap

BOX_INFLATION = 0.10


class RotationUnderdetermined(ValueError):
    """Too few, or collinear, matched pairs to fix a rotation."""


class Rif3DModel(CostModel):
    n_theta = 3

    def __init__(self, source: PointSet, target: PointSet):
        if source.dim != 3 or target.dim != 3:
            raise ValueError("Rif3DModel needs 3D source and target point sets")
        self.source = source
        self.target = target
        self._x = source.points
        self.target_norms = np.linalg.norm(target.points, axis=1)

    def _moved_norms(self, t) -> np.ndarray:
        return np.linalg.norm(self._x + self.check_theta(t), axis=1)

    def true_matrix(self, t) -> np.ndarray:
        d = self._moved_norms(t)[:, None] - self.target_norms[None, :]
        return d * d

    def cvx_matrix(self, t) -> np.ndarray:
        q = self._moved_norms(t)
        return np.broadcast_to((q * q)[:, None], self.shape).copy()

    def cav_matrix(self, t) -> np.ndarray:
        q = self._moved_norms(t)[:, None]
        yn = self.target_norms[None, :]
        return yn * (yn - 2.0 * q)

    def cav_stack(self, ts) -> np.ndarray:
        q = np.linalg.norm(self._x[None, :, :] + np.asarray(ts)[:, None, :], axis=2)[:, :, None]
        yn = self.target_norms[None, None, :]
        return yn * (yn - 2.0 * q)

    def grad_cvx_tensor(self, t) -> np.ndarray:
        g = 2.0 * (self._x + self.check_theta(t))
        return np.broadcast_to(g[:, None, :], self.shape + (3,)).copy()

    def rank_one_true(self, t) -> tuple:
        q = self._moved_norms(t)
        b = self.target_norms
        return q * q, b * b, -2.0 * q, b

    def rank_one_bound(self, t0, ts) -> tuple:
        # tangent of ||x_i + t||^2 at t0, plus the exact concave part at each t
        t0 = self.check_theta(t0)
        ts = np.atleast_2d(np.asarray(ts, dtype=np.float64))
        v0 = self._x + t0
        lin = np.sum(v0 * v0, axis=1)[None, :] + 2.0 * (ts - t0) @ v0.T
        d = self._x[None, :, :] + ts[:, None, :]
        q = np.sqrt(np.einsum("vik,vik->vi", d, d))
        b = self.target_norms
        return lin, b * b, -2.0 * q, b

    def eval_true(self, i, j, t) -> float:
        return float((np.linalg.norm(self._x[i] + self.check_theta(t)) - self.target_norms[j]) ** 2)

    def eval_cvx(self, i, j, t) -> float:
        v = self._x[i] + self.check_theta(t)
        return float(v @ v)

    def eval_cav(self, i, j, t) -> float:
        q = np.linalg.norm(self._x[i] + self.check_theta(t))
        yn = self.target_norms[j]
        return float(yn * (yn - 2.0 * q))

    def grad_cvx(self, i, j, t) -> np.ndarray:
        return 2.0 * (self._x[i] + self.check_theta(t))

    def default_box(self, n_p: int = 1) -> SearchBox:
        """Every ``t`` putting at least ``n_p`` source points inside the target norm ball.

        Matched points keep their norm, so each true match lands in that ball.
        Targets are rotated copies, so their bounding box says nothing about
        ``x + t``; only the largest target norm does. The bound is taken per axis.
        """
        if not 1 <= n_p <= len(self._x):
            raise ValueError(f"n_p={n_p} outside [1, {len(self._x)}]")
        r = float(self.target_norms.max())
        xs = np.sort(self._x, axis=0)
        # t_k >= -r - x_ik and t_k <= r - x_ik must hold for n_p of the points
        lower = -r - xs[-n_p]
        upper = r - xs[n_p - 1]
        # noisy norms can make the interval empty; keep its midpoint
        mid = 0.5 * (lower + upper)
        lower, upper = np.minimum(lower, mid), np.maximum(upper, mid)
        pad = BOX_INFLATION * r
        return SearchBox(lower - pad, upper + pad)


def kabsch_rotation(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Proper rotation ``R`` minimising ``sum ||R a_k - b_k||^2`` (no centring)."""
    H = a.T @ b
    U, _, Vt = np.linalg.svd(H)
    d = np.sign(np.linalg.det(Vt.T @ U.T))
    if d == 0:
        d = 1.0
    return Vt.T @ np.diag([1.0, 1.0, d]) @ U.T


def recover_rotation(source: PointSet, target: PointSet, t_star, n_p: int) -> tuple[Transform3DRigid, np.ndarray]:
    """Match on norm residuals at ``t_star``, then fit ``R`` on the matched pairs.

    Returns the rigid transform and the ``(n_p, 2)`` matched index pairs. Points
    sharing a norm are interchangeable to the matcher, so the rotation is only as
    good as the norm-based correspondences.
    """
    t_star = np.asarray(t_star, dtype=np.float64).reshape(3)
    if not np.all(np.isfinite(t_star)):
        raise ValueError("t_star must be finite")
    model = Rif3DModel(source, target)
    pairs = solve_klap(model.true_matrix(t_star), n_p).pairs
    if len(pairs) < 3:
        raise RotationUnderdetermined(f"rotation needs at least 3 matched pairs, got {len(pairs)}")
    a = source.points[pairs[:, 0]] + t_star
    b = target.points[pairs[:, 1]]
    # rank < 2 leaves a free spin about the common axis
    sv = np.linalg.svd(a, compute_uv=False)
    if sv.size < 2 or sv[1] <= 1e-9 * max(sv[0], 1e-300):
        raise RotationUnderdetermined("matched source points are collinear with the origin")
    R = kabsch_rotation(a, b)
    return Transform3DRigid(R, t_star), pairs
