"""End-to-end registration pipelines on top of the branch-and-bound solver."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

import numpy as np

from .bnb import BnBConfig, BnBResult, ProgressCallback, TraceRow, solve
from .dcbound import best_assignment
from .geometry import PointSet, SearchBox, Transform2DSimilarity, Transform3DRigid
from .rif3d import Rif3DModel, RotationUnderdetermined, recover_rotation
from .sim2d import Sim2DModel, default_sim2d_box

log = logging.getLogger(__name__)

DEFAULT_EPSILON_FACTOR = 1e-4


def resolve_np(arg: Union[str, int, float], n_source: int, n_target: int) -> int:
    """Turn an ``n_p`` argument into a pair count.

    Integers (or integer strings without a decimal point) are absolute. Anything
    else is a fraction in ``(0, 1]`` of ``min(N, M)``, floored, at least 1.
    Fractions may be written as decimals (``"0.9"``) or ratios (``"1/2"``).
    """
    cap = min(n_source, n_target)
    if isinstance(arg, (int, np.integer)) and not isinstance(arg, bool):
        n = int(arg)
    else:
        text = str(arg).strip()
        if isinstance(arg, str) and text.lstrip("+").isdigit():
            n = int(text)
        else:
            try:
                frac = Fraction(text)
            except (ValueError, ZeroDivisionError):
                raise ValueError(f"cannot parse n_p {arg!r}") from None
            if not 0 < frac <= 1:
                raise ValueError(f"fractional n_p must lie in (0, 1], got {arg!r}")
            n = max(1, math.floor(frac * cap))
    if not 1 <= n <= cap:
        raise ValueError(f"n_p={n} infeasible for point counts ({n_source}, {n_target})")
    return n


def default_epsilon(target: PointSet) -> float:
    return DEFAULT_EPSILON_FACTOR * target.diameter() ** 2


@dataclass
class Registration:
    transform: Union[Transform2DSimilarity, Transform3DRigid]
    pairs: np.ndarray
    value: float  # objective at the returned parameters, original units
    n_p: int
    epsilon: float
    bnb: BnBResult
    trace: list[TraceRow]  # rescaled to original units
    timings: dict = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    @property
    def certificate(self) -> str:
        return self.bnb.certificate


POLISH_ROUNDS = 20


def _config(epsilon: float, n_p: int, max_iterations, max_seconds, threads, screen, polish=False) -> BnBConfig:
    return BnBConfig(
        epsilon=epsilon,
        n_p=n_p,
        max_iterations=max_iterations if max_iterations is not None else BnBConfig.max_iterations,
        max_seconds=max_seconds if max_seconds is not None else math.inf,
        threads=threads,
        screen=screen,
        polish_rounds=POLISH_ROUNDS if polish else 0,
    )


def register_2d(
    source: PointSet,
    target: PointSet,
    n_p: int,
    epsilon: Optional[float] = None,
    max_iterations: Optional[int] = None,
    max_seconds: Optional[float] = None,
    threads: int = 1,
    screen: bool = True,
    box: Optional[SearchBox] = None,
    progress: Optional[ProgressCallback] = None,
    polish: bool = True,
) -> Registration:
    """Globally register 2D sets under a similarity transform.

    The search runs on normalised copies: the source is centred on its centroid,
    the target on its own, and both are scaled so the farthest source point sits
    at unit distance. This keeps the translation box tight and the default box
    independent of where the data lives. ``box``, if given, is in those
    normalised coordinates. Results are mapped back exactly; the objective
    scales by ``1 / k^2`` and so does epsilon.

    With ``polish`` every new incumbent is refined by alternating least-squares
    refits and rematching. This only lowers upper bounds, so the certificate is
    unchanged, but incumbents reach the optimal basin far sooner under outliers.
    """
    if source.dim != 2 or target.dim != 2:
        raise ValueError("register_2d needs 2D point sets")
    if epsilon is None:
        epsilon = default_epsilon(target)
    t0 = time.perf_counter()
    cx = source.points.mean(axis=0)
    cy = target.points.mean(axis=0)
    reach = float(np.max(np.linalg.norm(source.points - cx, axis=1)))
    k = 1.0 / reach if reach > 0 else 1.0
    src = PointSet(k * (source.points - cx))
    tgt = PointSet(k * (target.points - cy))
    model = Sim2DModel(src, tgt)
    if box is None:
        box = default_sim2d_box(src, tgt)
    cfg = _config(epsilon * k * k, n_p, max_iterations, max_seconds, threads, screen, polish)
    res = solve(model, box, cfg, progress)

    a, b, tx, ty = res.theta
    A = np.array([[a, -b], [b, a]])
    t = np.array([tx, ty]) / k - A @ cx + cy
    transform = Transform2DSimilarity(np.array([a, b, t[0], t[1]]))
    assignment = best_assignment(Sim2DModel(source, target), transform.theta, n_p)
    inv = 1.0 / (k * k)
    trace = [TraceRow(r.iteration, r.incumbent * inv, r.min_lb * inv, r.active, r.elapsed) for r in res.trace]
    return Registration(
        transform=transform,
        pairs=assignment.pairs,
        value=assignment.total_cost,
        n_p=n_p,
        epsilon=epsilon,
        bnb=res,
        trace=trace,
        timings={"bnb": res.stats.elapsed, "total": time.perf_counter() - t0},
    )


def register_3d(
    source: PointSet,
    target: PointSet,
    n_p: int,
    epsilon: Optional[float] = None,
    max_iterations: Optional[int] = None,
    max_seconds: Optional[float] = None,
    threads: int = 1,
    screen: bool = False,
    box: Optional[SearchBox] = None,
    progress: Optional[ProgressCallback] = None,
) -> Registration:
    """Translation by global search on point norms, then a best-effort rotation fit.

    The target is taken as ``R (x + t)``. Norms are not translation invariant, so
    no centring is applied. If the matched pairs cannot fix a rotation the
    identity is kept and a warning is recorded.
    """
    if source.dim != 3 or target.dim != 3:
        raise ValueError("register_3d needs 3D point sets")
    if epsilon is None:
        epsilon = default_epsilon(target)
    t0 = time.perf_counter()
    model = Rif3DModel(source, target)
    if box is None:
        box = model.default_box(n_p)
    res = solve(model, box, _config(epsilon, n_p, max_iterations, max_seconds, threads, screen), progress)
    t_star = res.theta
    t1 = time.perf_counter()
    warnings = []
    try:
        transform, pairs = recover_rotation(source, target, t_star, n_p)
    except RotationUnderdetermined as exc:
        msg = f"rotation not recovered: {exc}"
        log.warning(msg)
        warnings.append(msg)
        transform = Transform3DRigid(np.eye(3), t_star)
        pairs = best_assignment(model, t_star, n_p).pairs
    t2 = time.perf_counter()
    return Registration(
        transform=transform,
        pairs=pairs,
        value=res.value,
        n_p=n_p,
        epsilon=epsilon,
        bnb=res,
        trace=list(res.trace),
        timings={"translation": t1 - t0, "rotation": t2 - t1, "total": t2 - t0},
        warnings=warnings,
    )
