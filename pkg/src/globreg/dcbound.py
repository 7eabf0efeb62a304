"""Concave underestimators of the marginalised registration objective.

A cost model supplies pairwise costs ``E_ij(theta) = cvx_ij(theta) + cav_ij(theta)``
split into a convex and a concave part. Replacing the convex part by its tangent
plane at the box centre gives ``m_ij <= E_ij``, concave in ``theta``. The function

    z(theta) = min over k-cardinality matchings P of  sum_ij P_ij m_ij(theta)

is a pointwise minimum of concave functions, hence concave, so its minimum over a
box is reached at a corner. Evaluating ``z`` at the ``2**n`` corners (one k-LAP
each) therefore bounds the true objective from below on the whole box.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from concurrent.futures import Executor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .geometry import PointSet, SearchBox, box_vertices
from .klap import AssignmentResult, klap_cost, klap_values, klap_values_rank_one, solve_klap


class CostModel(ABC):
    """Pairwise registration cost with a convex + concave split.

    Subclasses implement the vectorised ``*_matrix`` methods (shape ``(N, M)``)
    and ``grad_cvx_tensor`` (shape ``(N, M, n_theta)``); the scalar per-pair
    accessors are derived from cheap direct formulas where available.
    """

    n_theta: int
    has_concave = True  # False lets the bound skip an all-zero concave term
    source: PointSet
    target: PointSet

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.source), len(self.target)

    @abstractmethod
    def true_matrix(self, theta) -> np.ndarray: ...

    @abstractmethod
    def cvx_matrix(self, theta) -> np.ndarray: ...

    @abstractmethod
    def cav_matrix(self, theta) -> np.ndarray: ...

    @abstractmethod
    def grad_cvx_tensor(self, theta) -> np.ndarray: ...

    @abstractmethod
    def default_box(self) -> SearchBox: ...

    def eval_true(self, i: int, j: int, theta) -> float:
        return float(self.true_matrix(theta)[i, j])

    def eval_cvx(self, i: int, j: int, theta) -> float:
        return float(self.cvx_matrix(theta)[i, j])

    def eval_cav(self, i: int, j: int, theta) -> float:
        return float(self.cav_matrix(theta)[i, j])

    def grad_cvx(self, i: int, j: int, theta) -> np.ndarray:
        return self.grad_cvx_tensor(theta)[i, j]

    def linearise(self, theta0) -> tuple[np.ndarray, np.ndarray]:
        """Convex parts and their gradients at ``theta0``."""
        return self.cvx_matrix(theta0), self.grad_cvx_tensor(theta0)

    def cav_stack(self, thetas: np.ndarray) -> np.ndarray:
        """Concave parts at each row of ``thetas``, shape ``(V, N, M)``."""
        return np.stack([self.cav_matrix(t) for t in thetas])

    def rank_one_true(self, theta) -> Optional[tuple]:
        """``(r, s, p, v)`` with ``E_ij = r_i + s_j + p_i v_j``, or None."""
        return None

    def rank_one_bound(self, theta0, thetas) -> Optional[tuple]:
        """Same form for the underestimator linearised at ``theta0``, one row per
        vertex in ``r`` and ``p``, or None."""
        return None

    def refit(self, pairs: np.ndarray) -> Optional[np.ndarray]:
        """Parameters minimising the summed cost of fixed ``pairs``; None if unsupported."""
        return None

    def check_theta(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=np.float64).reshape(-1)
        if theta.shape != (self.n_theta,):
            raise ValueError(f"expected {self.n_theta} parameters, got {theta.shape[0]}")
        return theta


@dataclass(frozen=True)
class Underestimator:
    """Tangent data of the convex parts at ``theta0`` for every (i, j) pair."""

    theta0: np.ndarray
    cvx0: np.ndarray  # (N, M)
    grad0: np.ndarray  # (N, M, n_theta)

    def matrix(self, model: CostModel, theta) -> np.ndarray:
        """``[m_ij(theta)]`` for all pairs."""
        theta = np.asarray(theta, dtype=np.float64)
        return self.cvx0 + self.grad0 @ (theta - self.theta0) + model.cav_matrix(theta)

    def matrices(self, model: CostModel, thetas: np.ndarray) -> np.ndarray:
        """``[m_ij]`` at every row of ``thetas``, shape ``(V, N, M)``."""
        lin = np.tensordot(thetas - self.theta0, self.grad0, axes=([1], [2]))
        lin += self.cvx0
        if model.has_concave:
            lin += model.cav_stack(thetas)
        return lin


def underestimate(model: CostModel, box: SearchBox) -> Underestimator:
    """Linearise every convex part at the centre of ``box``."""
    if box.ndim != model.n_theta:
        raise ValueError(f"box has {box.ndim} dimensions, model expects {model.n_theta}")
    theta0 = box.center()
    return Underestimator(theta0, *model.linearise(theta0))


def eval_m(u: Underestimator, model: CostModel, i: int, j: int, theta) -> float:
    theta = np.asarray(theta, dtype=np.float64)
    return float(u.cvx0[i, j] + u.grad0[i, j] @ (theta - u.theta0) + model.eval_cav(i, j, theta))


def z_value(u: Underestimator, model: CostModel, theta, n_p: int) -> float:
    """The auxiliary function: best k-matching cost under the underestimated costs."""
    return klap_cost(u.matrix(model, theta), n_p)


@dataclass(frozen=True)
class Bound:
    lb: float
    theta: np.ndarray  # minimising vertex (first in vertex order on ties)
    vertex_values: np.ndarray  # z at every vertex, in vertex order
    lap_solves: int


def _check_np(model: CostModel, n_p: int) -> None:
    if n_p < 1 or n_p > min(model.shape):
        raise ValueError(f"n_p={n_p} infeasible for point counts {model.shape}")


def bound_box(
    model: CostModel,
    box: SearchBox,
    n_p: int,
    executor: Optional[Executor] = None,
    screen: bool = False,
) -> Bound:
    """Vertex lower bound of ``box`` with per-vertex detail.

    Repeated vertices (zero-width edges) are solved once. With an executor the
    vertex LAPs run concurrently; the reduction is in vertex order either way.

    With ``screen`` the vertices are visited in order of a cheap k-LAP lower
    bound and a vertex is skipped once that bound strictly exceeds the best
    value found, since it cannot be the minimiser. LB and argmin are unchanged;
    skipped vertices report ``inf`` in ``vertex_values``. Models with a rank-one
    cost structure take an exact dynamic program instead and ignore both options.
    """
    _check_np(model, n_p)
    if box.ndim != model.n_theta:
        raise ValueError(f"box has {box.ndim} dimensions, model expects {model.n_theta}")
    verts = box_vertices(box)
    if np.all(box.widths > 0):
        uniq, inverse = verts, np.arange(len(verts))
    else:
        uniq, first, inverse = np.unique(verts, axis=0, return_index=True, return_inverse=True)
        inverse = inverse.reshape(-1)
        # keep vertex order among the distinct corners
        order = np.argsort(first, kind="stable")
        uniq = uniq[order]
        inverse = np.argsort(order)[inverse]

    factors = model.rank_one_bound(box.center(), uniq)
    if factors is not None:
        # structured costs: an exact solver that needs no matrices
        zu = klap_values_rank_one(*factors, n_p)
        solves = len(uniq)
    elif executor is None or screen:
        mats = underestimate(model, box).matrices(model, uniq)
        zu, solves = klap_values(mats, n_p, screen)
    else:
        mats = underestimate(model, box).matrices(model, uniq)
        zu = np.array(list(executor.map(klap_cost, mats, [n_p] * len(mats))))
        solves = len(uniq)
    z = zu[inverse]
    k = int(np.argmin(z))
    return Bound(float(z[k]), verts[k].copy(), z, solves)


def lower_bound(
    model: CostModel, box: SearchBox, n_p: int, executor: Optional[Executor] = None
) -> tuple[float, np.ndarray]:
    """``(LB, argmin vertex)`` with ``LB <= E(theta)`` for every ``theta`` in ``box``."""
    b = bound_box(model, box, n_p, executor)
    return b.lb, b.theta


def eval_objective(model: CostModel, theta, n_p: int) -> float:
    """Marginalised objective: best k-matching cost under the true pairwise costs."""
    factors = model.rank_one_true(model.check_theta(theta))
    if factors is not None:
        _check_np(model, n_p)
        return float(klap_values_rank_one(*factors, n_p)[0])
    return best_assignment(model, theta, n_p).total_cost


def best_assignment(model: CostModel, theta, n_p: int) -> AssignmentResult:
    _check_np(model, n_p)
    theta = model.check_theta(theta)
    return solve_klap(model.true_matrix(theta), n_p)
