"""Exact k-cardinality linear assignment.

Select exactly ``n_p`` (row, column) pairs, each row and each column used at
most once, minimising the summed cost. Costs may be negative.

Two exact solvers are provided:

``"ssp"`` (default)
    Successive shortest augmenting paths on the bipartite flow network with
    node potentials, run from every free row at once and stopped after ``n_p``
    augmentations. Each augmentation yields a minimum-cost assignment of its
    own cardinality, so truncation is exact. Compiled with numba; the cheapest
    free row of each column is cached, so early augmentations are linear in M.

``"lsa"``
    The same problem reduced to a rectangular assignment with ``min(N, M) - n_p``
    zero-cost "unmatched" columns and strictly positive shifted real costs, solved
    by :func:`scipy.optimize.linear_sum_assignment`. Kept as an independent check.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit
from scipy.optimize import linear_sum_assignment

BRUTE_FORCE_LIMIT = 10**7
SCREEN_SLACK = 1e-9  # relative; keeps near-ties in the exact scan


@dataclass(frozen=True)
class AssignmentResult:
    pairs: np.ndarray  # (n_p, 2) int array of (row, col), sorted by row
    total_cost: float

    def __len__(self) -> int:
        return self.pairs.shape[0]


def _check(c, n_p: int) -> np.ndarray:
    c = np.asarray(c, dtype=np.float64)
    if c.ndim != 2 or c.size == 0:
        raise ValueError("cost matrix must be a non-empty 2D array")
    if int(n_p) != n_p or n_p < 1:
        raise ValueError(f"n_p must be a positive integer, got {n_p!r}")
    if n_p > min(c.shape):
        raise ValueError(f"n_p={n_p} exceeds min(N, M)={min(c.shape)}")
    if not np.all(np.isfinite(c)):
        raise ValueError("cost matrix entries must be finite")
    return c


def _result(c: np.ndarray, rows, cols) -> AssignmentResult:
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    order = np.argsort(rows, kind="stable")
    pairs = np.stack([rows[order], cols[order]], axis=1)
    return AssignmentResult(pairs, float(c[pairs[:, 0], pairs[:, 1]].sum()))


def solve_klap(c, n_p: int, method: str = "ssp") -> AssignmentResult:
    """Minimum-cost selection of exactly ``n_p`` one-to-one pairs from ``c``."""
    c = _check(c, n_p)
    if method == "lsa":
        return _solve_lsa(c, int(n_p))
    if method == "ssp":
        return _solve_ssp(c, int(n_p))
    raise ValueError(f"unknown k-LAP method {method!r}")


def klap_cost(c: np.ndarray, n_p: int) -> float:
    """Optimal value only; skips validation. For hot loops on trusted matrices."""
    return float(_klap_value(np.ascontiguousarray(c, dtype=np.float64), n_p))


def klap_lower_bound(c: np.ndarray, n_p: int) -> float:
    """Cheap bound ``<=`` the optimal k-LAP value.

    Every chosen pair costs at least its row minimum and at least its column
    minimum, and chosen rows (columns) are distinct.
    """
    rows = np.partition(c.min(axis=1), n_p - 1)[:n_p].sum()
    cols = np.partition(c.min(axis=0), n_p - 1)[:n_p].sum()
    return float(max(rows, cols))


def klap_lower_bounds(stack: np.ndarray, n_p: int) -> np.ndarray:
    """:func:`klap_lower_bound` for each matrix of a ``(V, N, M)`` stack."""
    rows = np.partition(stack.min(axis=2), n_p - 1, axis=1)[:, :n_p].sum(axis=1)
    cols = np.partition(stack.min(axis=1), n_p - 1, axis=1)[:, :n_p].sum(axis=1)
    return np.maximum(rows, cols)


def _solve_lsa(c: np.ndarray, n_p: int) -> AssignmentResult:
    transposed = c.shape[0] > c.shape[1]
    a = c.T if transposed else c
    n, m = a.shape
    lo = a.min()
    # strictly positive real costs make every dummy column strictly preferable,
    # so all n - n_p dummies get used and exactly n_p real pairs remain
    shift = (a.max() - lo) + 1.0 if a.max() > lo else 1.0
    if n == n_p:
        work = a - lo + shift
    else:
        work = np.zeros((n, m + n - n_p))
        work[:, :m] = a - lo + shift
    r, k = linear_sum_assignment(work)
    real = k < m
    r, k = r[real], k[real]
    if transposed:
        r, k = k, r
    return _result(c, r, k)


@njit(cache=True, nogil=True)
def _ssp_kernel(w, n_p):
    """Successive shortest paths on ``w >= 0``.

    Returns the row -> column matching and the final column potentials, which
    are optimal column prices for the cardinality-``n_p`` problem.
    """
    n, m = w.shape
    inf = np.inf
    p_row = np.zeros(n)
    p_col = np.zeros(m)
    row_match = np.full(n, -1, np.int64)
    col_match = np.full(m, -1, np.int64)
    # cheapest free row per column; free rows keep zero potential throughout
    col_min = np.empty(m)
    col_arg = np.empty(m, np.int64)
    for j in range(m):
        best = inf
        arg = -1
        for i in range(n):
            if w[i, j] < best:
                best = w[i, j]
                arg = i
        col_min[j] = best
        col_arg[j] = arg
    d_col = np.empty(m)
    d_row = np.empty(n)
    pred = np.empty(m, np.int64)
    scanned = np.zeros(m, np.bool_)
    visited = np.zeros(n, np.bool_)

    for _ in range(n_p):
        for j in range(m):
            d_col[j] = col_min[j] - p_col[j]
            pred[j] = col_arg[j]
            scanned[j] = False
        for i in range(n):
            visited[i] = False
        sink = -1
        d_sink = 0.0
        while True:
            j = -1
            dj = inf
            for k in range(m):
                if not scanned[k] and d_col[k] < dj:
                    dj = d_col[k]
                    j = k
            scanned[j] = True
            i = col_match[j]
            if i < 0:
                sink = j
                d_sink = dj
                break
            di = dj - w[i, j] + p_col[j] - p_row[i]
            d_row[i] = di
            visited[i] = True
            base = di + p_row[i]
            for k in range(m):
                if not scanned[k]:
                    r = base + w[i, k] - p_col[k]
                    if r < d_col[k]:
                        d_col[k] = r
                        pred[k] = i
        for j in range(m):
            if scanned[j] and d_col[j] < d_sink:
                p_col[j] += d_col[j]
            else:
                p_col[j] += d_sink
        for i in range(n):
            if row_match[i] >= 0:
                p_row[i] += d_row[i] if visited[i] and d_row[i] < d_sink else d_sink
        j = sink
        while True:
            i = pred[j]
            prev = row_match[i]
            row_match[i] = j
            col_match[j] = i
            if prev < 0:
                break
            j = prev
        # row i just left the free set
        for k in range(m):
            if col_arg[k] == i:
                best = inf
                arg = -1
                for r in range(n):
                    if row_match[r] < 0 and w[r, k] < best:
                        best = w[r, k]
                        arg = r
                col_min[k] = best
                col_arg[k] = arg
    return row_match, p_col


@njit(cache=True, nogil=True)
def _klap_value(c, n_p):
    row_match, _ = _ssp_kernel(c - c.min(), n_p)
    total = 0.0
    for i in range(c.shape[0]):
        if row_match[i] >= 0:
            total += c[i, row_match[i]]
    return total


@njit(cache=True, nogil=True)
def _cheap_bound(c, n_p):
    n, m = c.shape
    rmin = np.empty(n)
    cmin = np.full(m, np.inf)
    for i in range(n):
        best = np.inf
        for j in range(m):
            v = c[i, j]
            if v < best:
                best = v
            if v < cmin[j]:
                cmin[j] = v
        rmin[i] = best
    return max(np.sort(rmin)[:n_p].sum(), np.sort(cmin)[:n_p].sum())


@njit(cache=True, nogil=True)
def _priced_bound(c, n_p, price):
    """Lagrangian bound: any pairs pay at least ``min_j (c_ij - price_j)`` per row
    plus the prices of ``n_p`` distinct columns."""
    n, m = c.shape
    r = np.empty(n)
    for i in range(n):
        best = np.inf
        for j in range(m):
            v = c[i, j] - price[j]
            if v < best:
                best = v
        r[i] = best
    return np.sort(r)[:n_p].sum() + np.sort(price)[:n_p].sum()


@njit(cache=True, nogil=True)
def _stack_values(stack, n_p, screen):
    """Optimal values over a ``(V, N, M)`` stack, ``inf`` where screening skipped.

    With ``screen`` the matrix with the smallest known bound is solved next; its
    optimal column prices then tighten the bounds of the rest. The scan stops
    once every unsolved bound clearly exceeds the best value, so every matrix
    that could attain or tie the minimum is solved.
    """
    V = stack.shape[0]
    z = np.full(V, np.inf)
    if not screen:
        for v in range(V):
            z[v] = _klap_value(stack[v], n_p)
        return z, V
    bound = np.empty(V)
    for v in range(V):
        bound[v] = _cheap_bound(stack[v], n_p)
    done = np.zeros(V, np.bool_)
    best = np.inf
    solves = 0
    while True:
        v = -1
        lo = np.inf
        for k in range(V):
            if not done[k] and bound[k] < lo:
                lo = bound[k]
                v = k
        if v < 0 or lo > best + SCREEN_SLACK * (1.0 + abs(best)):
            break
        c = stack[v]
        shift = c.min()
        row_match, price = _ssp_kernel(c - shift, n_p)
        total = 0.0
        for i in range(c.shape[0]):
            if row_match[i] >= 0:
                total += c[i, row_match[i]]
        z[v] = total
        done[v] = True
        solves += 1
        if total < best:
            best = total
        for k in range(V):
            if not done[k]:
                b = _priced_bound(stack[k], n_p, price)
                if b > bound[k]:
                    bound[k] = b
    return z, solves


def klap_values(stack: np.ndarray, n_p: int, screen: bool = False) -> tuple[np.ndarray, int]:
    """Optimal k-LAP value of every matrix in a stack, with optional exact screening.

    Returns the values (``inf`` for matrices the screen proved non-minimal) and
    the number of assignments actually solved. The minimum and its first index
    are the same with and without screening.
    """
    return _stack_values(np.ascontiguousarray(stack, dtype=np.float64), n_p, screen)


def klap_cost_below(c: np.ndarray, n_p: int, threshold: float) -> Optional[float]:
    """Optimal value, or ``None`` when a cheap bound already shows it is ``>= threshold``."""
    c = np.ascontiguousarray(c, dtype=np.float64)
    if _cheap_bound(c, n_p) >= threshold + SCREEN_SLACK * (1.0 + abs(threshold)):
        return None
    return float(_klap_value(c, n_p))


@njit(cache=True, nogil=True)
def _monge_values(r, s, p, v, n_p):
    # With rows sorted by p ascending and columns by v descending, the matrix
    # r_i + s_j + p_i v_j is Monge, so crossing pairs can always be uncrossed
    # and some optimal k-matching is monotone. F[i, j, c] is the best c pairs
    # among the first i rows and j columns; only states that can still reach
    # n_p pairs are filled, and the cells just outside that band are set to inf.
    V, N = r.shape
    M = s.size
    cols = np.argsort(-v)
    vs = v[cols]
    ss = s[cols]
    out = np.empty(V)
    prev = np.empty((M + 1, n_p + 2))
    cur = np.empty((M + 1, n_p + 2))
    for k in range(V):
        rows = np.argsort(p[k])
        if n_p == N and n_p == M:
            # a square Monge matrix is solved by the identity
            total = 0.0
            for i in range(N):
                a = rows[i]
                total += r[k, a] + ss[i] + p[k, a] * vs[i]
            out[k] = total
            continue
        for j in range(M + 1):
            prev[j, 0] = 0.0
            prev[j, 1] = np.inf
        for i in range(1, N + 1):
            a = rows[i - 1]
            ra = r[k, a]
            pa = p[k, a]
            cur[0, 0] = 0.0
            cur[0, 1] = np.inf
            for j in range(1, M + 1):
                lo = max(0, n_p - min(N - i, M - j))
                hi = min(i, j, n_p)
                for c in range(lo, hi + 1):
                    best = prev[j, c]
                    x = cur[j - 1, c]
                    if x < best:
                        best = x
                    if c >= 1:
                        y = prev[j - 1, c - 1] + ra + ss[j - 1] + pa * vs[j - 1]
                        if y < best:
                            best = y
                    cur[j, c] = best
                if lo >= 1:
                    cur[j, lo - 1] = np.inf
                cur[j, hi + 1] = np.inf
            prev, cur = cur, prev
        out[k] = prev[M, n_p]
    return out


def klap_values_rank_one(r, s, p, v, n_p: int) -> np.ndarray:
    """Optimal k-LAP values of ``c_ij = r_i + s_j + p_i v_j``, one per row of ``r`` and ``p``.

    ``r`` and ``p`` have shape ``(V, N)``; ``s`` and ``v`` have shape ``(M,)``. The
    rank-one interaction makes the sorted matrix Monge, so a banded dynamic
    program is exact and costs ``O(N M (min(N, M) - n_p + 1))`` per matrix.
    """
    r = np.ascontiguousarray(np.atleast_2d(r), dtype=np.float64)
    p = np.ascontiguousarray(np.atleast_2d(p), dtype=np.float64)
    s = np.ascontiguousarray(s, dtype=np.float64).reshape(-1)
    v = np.ascontiguousarray(v, dtype=np.float64).reshape(-1)
    if r.shape != p.shape or s.shape != v.shape:
        raise ValueError("r and p, and s and v, must have matching shapes")
    n_p = int(n_p)
    if not 1 <= n_p <= min(r.shape[1], s.size):
        raise ValueError(f"n_p={n_p} infeasible for a {r.shape[1]}x{s.size} matrix")
    return _monge_values(r, s, p, v, n_p)


def _solve_ssp(c: np.ndarray, n_p: int) -> AssignmentResult:
    # nonnegative costs make zero potentials feasible at the start
    row_match, _ = _ssp_kernel(c - c.min(), n_p)
    rows = np.flatnonzero(row_match >= 0)
    return _result(c, rows, row_match[rows])


def brute_force_klap(c, n_p: int) -> AssignmentResult:
    """Exhaustive enumeration of every size-``n_p`` partial matching."""
    c = _check(c, n_p)
    n, m = c.shape
    count = math.comb(n, n_p) * math.perm(m, n_p)
    if count > BRUTE_FORCE_LIMIT:
        raise ValueError(f"{count} candidate matchings exceed the enumeration limit")
    perms = np.array(list(itertools.permutations(range(m), n_p)), dtype=np.int64)
    best_cost, best_rows, best_cols = np.inf, None, None
    for rows in itertools.combinations(range(n), n_p):
        rows = np.array(rows)
        totals = c[rows[None, :], perms].sum(axis=1)
        k = int(np.argmin(totals))
        if totals[k] < best_cost:
            best_cost, best_rows, best_cols = totals[k], rows, perms[k]
    return _result(c, best_rows, best_cols)
