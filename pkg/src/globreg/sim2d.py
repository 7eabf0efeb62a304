"""2D similarity registration cost ``E_ij(theta) = ||J_i theta - y_j||^2``.

The cost is a convex quadratic in ``theta``, so the concave part of its split is
identically zero and the underestimator is the plain tangent plane.
"""

from __future__ import annotations

import numpy as np

from .dcbound import CostModel
from .geometry import PointSet, SearchBox, jacobian2d

DEFAULT_MAX_SCALE = 1.5
BOX_INFLATION = 0.10


class Sim2DModel(CostModel):
    n_theta = 4
    has_concave = False

    def __init__(self, source: PointSet, target: PointSet):
        if source.dim != 2 or target.dim != 2:
            raise ValueError("Sim2DModel needs 2D source and target point sets")
        self.source = source
        self.target = target
        self._x = source.points
        self._y = target.points
        self.jacobians = np.stack([jacobian2d(x) for x in self._x])  # (N, 2, 4)

    def _residuals(self, theta) -> np.ndarray:
        th = self.check_theta(theta)
        a, b, tx, ty = th
        x1, x2 = self._x[:, 0], self._x[:, 1]
        mapped = np.stack([a * x1 - b * x2 + tx, b * x1 + a * x2 + ty], axis=1)
        return mapped[:, None, :] - self._y[None, :, :]  # (N, M, 2)

    def true_matrix(self, theta) -> np.ndarray:
        r = self._residuals(theta)
        return np.einsum("ijk,ijk->ij", r, r)

    cvx_matrix = true_matrix

    def cav_matrix(self, theta) -> np.ndarray:
        return np.zeros(self.shape)

    def cav_stack(self, thetas) -> np.ndarray:
        return np.zeros((len(thetas),) + self.shape)

    def grad_cvx_tensor(self, theta) -> np.ndarray:
        return self._grad_from(self._residuals(theta))

    def _grad_from(self, r) -> np.ndarray:
        r1, r2 = 2.0 * r[..., 0], 2.0 * r[..., 1]
        x1 = self._x[:, 0][:, None]
        x2 = self._x[:, 1][:, None]
        # 2 J_i^T (J_i theta - y_j), written out column by column
        return np.stack([x1 * r1 + x2 * r2, x1 * r2 - x2 * r1, r1, r2], axis=-1)

    def linearise(self, theta0) -> tuple[np.ndarray, np.ndarray]:
        r = self._residuals(theta0)
        return np.einsum("ijk,ijk->ij", r, r), self._grad_from(r)

    def eval_true(self, i, j, theta) -> float:
        r = self.jacobians[i] @ self.check_theta(theta) - self._y[j]
        return float(r @ r)

    eval_cvx = eval_true

    def eval_cav(self, i, j, theta) -> float:
        return 0.0

    def grad_cvx(self, i, j, theta) -> np.ndarray:
        J = self.jacobians[i]
        return 2.0 * J.T @ (J @ self.check_theta(theta) - self._y[j])

    def refit(self, pairs: np.ndarray) -> np.ndarray:
        # fixed pairs make the cost linear least squares in theta
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        A = self.jacobians[pairs[:, 0]].reshape(-1, 4)
        b = self._y[pairs[:, 1]].reshape(-1)
        return np.linalg.lstsq(A, b, rcond=None)[0]

    def default_box(self, max_scale: float = DEFAULT_MAX_SCALE) -> SearchBox:
        """``(s cos, s sin)`` in ``[-s_max, s_max]^2``; translation covers every
        placement of the scaled source whose points can reach the target extent."""
        return default_sim2d_box(self.source, self.target, max_scale)


def default_sim2d_box(source: PointSet, target: PointSet, max_scale: float = DEFAULT_MAX_SCALE) -> SearchBox:
    reach = max_scale * float(np.max(np.linalg.norm(source.points, axis=1)))
    ylo = target.points.min(axis=0) - reach
    yhi = target.points.max(axis=0) + reach
    pad = 0.5 * BOX_INFLATION * (yhi - ylo)
    lower = np.concatenate([[-max_scale, -max_scale], ylo - pad])
    upper = np.concatenate([[max_scale, max_scale], yhi + pad])
    return SearchBox(lower, upper)
