"""Figures written next to the CSV outputs. Headless (Agg) only."""

from __future__ import annotations

from collections import defaultdict
from typing import Iterable, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .bnb import TraceRow  # noqa: E402
from .geometry import PathLike, PointSet  # noqa: E402


def plot_trace(path: PathLike, trace: Sequence[TraceRow]) -> None:
    """Incumbent and smallest open LB against iteration."""
    it = np.array([r.iteration for r in trace])
    inc = np.array([r.incumbent for r in trace])
    lb = np.array([r.min_lb for r in trace])
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(it, inc, label="incumbent")
    finite = np.isfinite(lb)
    ax.plot(it[finite], lb[finite], label="min open LB")
    ax.set_xlabel("iteration")
    ax.set_ylabel("objective")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_registration(path: PathLike, source: PointSet, target: PointSet, transform, pairs: np.ndarray) -> None:
    """Target, mapped source and the final matches."""
    mapped = transform.apply(source.points)
    y = target.points
    three_d = source.dim == 3
    fig = plt.figure(figsize=(6, 6))
    ax = fig.add_subplot(projection="3d" if three_d else None)
    ax.scatter(*y.T, s=14, marker="o", facecolors="none", edgecolors="tab:blue", label="target")
    ax.scatter(*mapped.T, s=10, marker="x", color="tab:red", label="mapped source")
    for i, j in np.asarray(pairs).reshape(-1, 2):
        seg = np.stack([mapped[i], y[j]])
        ax.plot(*seg.T, color="0.6", linewidth=0.6)
    if not three_d:
        ax.set_aspect("equal")
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_sweep(path: PathLike, rows: Iterable[dict]) -> None:
    """RMSE against severity, one series per ``n_p`` variant, median joined by a line."""
    groups: dict[str, dict[float, list[float]]] = defaultdict(lambda: defaultdict(list))
    regime = ""
    for r in rows:
        groups[r["variant"]][float(r["level"])].append(float(r["rmse"]))
        regime = r["regime"]
    fig, ax = plt.subplots(figsize=(6, 4))
    for variant, by_level in sorted(groups.items()):
        levels = sorted(by_level)
        (line,) = ax.plot(levels, [np.median(by_level[lv]) for lv in levels], marker="o", label=f"n_p = {variant} of truth")
        for lv in levels:
            ax.scatter([lv] * len(by_level[lv]), by_level[lv], s=8, alpha=0.5, color=line.get_color())
    ax.set_xlabel(f"{regime} level")
    ax.set_ylabel("RMSE")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
