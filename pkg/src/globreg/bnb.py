"""Best-first branch-and-bound over transformation-parameter boxes."""

from __future__ import annotations

import heapq
import itertools
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .dcbound import CostModel, best_assignment, bound_box, eval_objective
from .geometry import SearchBox, bisect_longest_edge
from .klap import klap_cost_below

log = logging.getLogger(__name__)

EPS_OPTIMAL = "eps-optimal"
BUDGET = "budget"

ProgressCallback = Callable[[int, int, float, float], None]


@dataclass
class BnBConfig:
    epsilon: float
    n_p: int
    max_iterations: int = 1_000_000
    max_seconds: float = math.inf
    threads: int = 1
    min_edge: float = 1e-12
    keep_pruned: bool = False
    screen: bool = False
    polish_rounds: int = 0  # local refits after each incumbent improvement

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if int(self.n_p) != self.n_p or self.n_p < 1:
            raise ValueError("n_p must be a positive integer")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if not self.max_seconds > 0:
            raise ValueError("max_seconds must be positive")
        if self.polish_rounds < 0:
            raise ValueError("polish_rounds must be non-negative")
        if self.threads < 1:
            raise ValueError("threads must be at least 1")


@dataclass
class BnBStats:
    iterations: int = 0
    boxes_bounded: int = 0
    boxes_pruned: int = 0
    atoms_pruned: int = 0
    bound_lap_solves: int = 0
    eval_lap_solves: int = 0
    elapsed: float = 0.0


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    incumbent: float
    min_lb: float
    active: int
    elapsed: float


@dataclass(frozen=True)
class ActiveBox:
    lb: float
    seq: int
    box: SearchBox = field(compare=False)
    theta: np.ndarray = field(compare=False)


class BnBState:
    """Active boxes keyed by ``(LB, insertion order)`` plus the incumbent."""

    def __init__(self, n_theta: int):
        self._heap: list[tuple[float, int, ActiveBox]] = []
        self._seq = itertools.count()
        self.incumbent_theta: Optional[np.ndarray] = None
        self.incumbent_value = math.inf
        self.iteration = 0
        self.stats = BnBStats()
        self.n_theta = n_theta

    def __len__(self) -> int:
        return len(self._heap)

    def push(self, box: SearchBox, lb: float, theta: np.ndarray) -> ActiveBox:
        item = ActiveBox(lb, next(self._seq), box, theta)
        heapq.heappush(self._heap, (lb, item.seq, item))
        return item

    def min_lb(self) -> float:
        return self._heap[0][0] if self._heap else math.inf

    def offer(self, theta: np.ndarray, value: float) -> bool:
        """Take ``theta`` as incumbent if strictly better."""
        if value < self.incumbent_value:
            self.incumbent_value = value
            self.incumbent_theta = np.array(theta, dtype=np.float64)
            return True
        return False

    def prune(self, epsilon: float) -> list[ActiveBox]:
        """Drop every box with ``LB >= incumbent - epsilon``; return the dropped ones."""
        cut = self.incumbent_value - epsilon
        keep, dropped = [], []
        for entry in self._heap:
            (dropped if entry[0] >= cut else keep).append(entry)
        if dropped:
            heapq.heapify(keep)
            self._heap = keep
        return [e[2] for e in dropped]

    def boxes(self) -> list[ActiveBox]:
        return [e[2] for e in sorted(self._heap)]

    def pop(self) -> ActiveBox:
        return heapq.heappop(self._heap)[2]


def select_branch_box(state: BnBState) -> ActiveBox:
    """Remove and return the active box with the smallest LB (oldest on ties)."""
    if not len(state):
        raise ValueError("no active boxes to branch")
    return state.pop()


@dataclass
class BnBResult:
    theta: np.ndarray
    value: float
    certificate: str
    gap_lb: float  # smallest LB still open; equals value on eps-optimal exit
    stats: BnBStats
    trace: list[TraceRow]
    pruned: list[ActiveBox]

    def __iter__(self):
        return iter((self.theta, self.value, self.certificate))


def polish_incumbent(model: CostModel, state: BnBState, box: SearchBox, cfg: BnBConfig) -> int:
    """Alternate refitting on the matched pairs with rematching, from the incumbent.

    Every accepted point is an exact evaluation inside ``box``, so the search
    certificate is unaffected. Returns the number of LAP solves spent.
    """
    if cfg.polish_rounds == 0 or state.incumbent_theta is None:
        return 0
    pairs = best_assignment(model, state.incumbent_theta, cfg.n_p).pairs
    solves = 1
    for _ in range(cfg.polish_rounds):
        cand = model.refit(pairs)
        if cand is None or not np.all(np.isfinite(cand)) or not box.contains(cand):
            break
        res = best_assignment(model, cand, cfg.n_p)
        solves += 1
        if not state.offer(cand, res.total_cost):
            break
        pairs = res.pairs
    return solves


def solve(
    model: CostModel,
    initial_box: SearchBox,
    cfg: BnBConfig,
    progress: Optional[ProgressCallback] = None,
) -> BnBResult:
    """Minimise the marginalised objective of ``model`` over ``initial_box``.

    Returns an epsilon-optimal incumbent when every box has been pruned, or the
    best incumbent found so far with certificate ``"budget"`` otherwise.
    """
    if initial_box.ndim != model.n_theta:
        raise ValueError(f"box has {initial_box.ndim} dimensions, model expects {model.n_theta}")
    if cfg.n_p > min(model.shape):
        raise ValueError(f"n_p={cfg.n_p} infeasible for point counts {model.shape}")

    state = BnBState(model.n_theta)
    stats = state.stats
    trace: list[TraceRow] = []
    pruned: list[ActiveBox] = []
    executor = ThreadPoolExecutor(cfg.threads) if cfg.threads > 1 else None
    start = time.perf_counter()
    new_boxes = [initial_box]
    certificate = BUDGET

    try:
        while True:
            state.iteration += 1
            stats.iterations = state.iteration

            bounds = [bound_box(model, b, cfg.n_p, executor, cfg.screen) for b in new_boxes]
            stats.boxes_bounded += len(bounds)
            stats.bound_lap_solves += sum(b.lap_solves for b in bounds)

            improved = False
            for b in bounds:
                if cfg.screen:
                    # a corner that cannot strictly beat the incumbent changes nothing
                    value = klap_cost_below(model.true_matrix(b.theta), cfg.n_p, state.incumbent_value)
                    if value is None:
                        continue
                else:
                    value = eval_objective(model, b.theta, cfg.n_p)
                stats.eval_lap_solves += 1
                improved |= state.offer(b.theta, value)
            if improved:
                stats.eval_lap_solves += polish_incumbent(model, state, initial_box, cfg)

            # boxes already queued can only become prunable when the incumbent moves
            dropped = state.prune(cfg.epsilon) if improved else []
            cut = state.incumbent_value - cfg.epsilon
            for box, b in zip(new_boxes, bounds):
                if b.lb < cut:
                    state.push(box, b.lb, b.theta)
                else:
                    dropped.append(ActiveBox(b.lb, -1, box, b.theta))
            stats.boxes_pruned += len(dropped)
            if cfg.keep_pruned:
                pruned.extend(dropped)

            elapsed = time.perf_counter() - start
            row = TraceRow(state.iteration, state.incumbent_value, state.min_lb(), len(state), elapsed)
            trace.append(row)
            if progress is not None:
                progress(row.iteration, row.active, row.incumbent, row.min_lb)

            if not len(state):
                certificate = EPS_OPTIMAL
                break
            if state.iteration >= cfg.max_iterations or elapsed >= cfg.max_seconds:
                break

            best = None
            while len(state):
                best = select_branch_box(state)
                if float(np.max(best.box.widths)) >= cfg.min_edge:
                    break
                # too small to split further; its corner was already evaluated
                stats.atoms_pruned += 1
                if cfg.keep_pruned:
                    pruned.append(best)
                best = None
            if best is None:
                certificate = EPS_OPTIMAL
                break
            new_boxes = list(bisect_longest_edge(best.box))
            if state.iteration % 1000 == 0:
                log.debug(
                    "iter %d: incumbent %.6g, min LB %.6g, %d active",
                    state.iteration, state.incumbent_value, state.min_lb(), len(state),
                )
    finally:
        if executor is not None:
            executor.shutdown()

    stats.elapsed = time.perf_counter() - start
    gap_lb = state.incumbent_value if certificate == EPS_OPTIMAL else min(state.min_lb(), state.incumbent_value)
    return BnBResult(
        theta=state.incumbent_theta,
        value=state.incumbent_value,
        certificate=certificate,
        gap_lb=gap_lb,
        stats=stats,
        trace=trace,
        pruned=pruned,
    )
