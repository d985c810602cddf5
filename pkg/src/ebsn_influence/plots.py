"""Static SVG scatter plots of group-influence vectors."""

from __future__ import annotations

import datetime
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_PAIRS = (("i_ego", "i_sc"), ("i_ego", "i_pc"), ("i_ego", "i_hc"),
          ("i_pc", "i_sc"), ("i_pc", "i_hc"), ("i_sc", "i_hc"))
_CLASS_COLORS = {"low": "tab:green", "medium": "tab:blue", "high": "tab:red"}


def _save(fig, path, timestamp):
    # fixed hash salt and no date keep the SVG byte-stable across runs
    with matplotlib.rc_context({"svg.hashsalt": "ebsn-influence"}):
        meta = {"Date": datetime.datetime.now().isoformat() if timestamp else None}
        fig.savefig(path, format="svg", metadata=meta)
    plt.close(fig)


def pairwise_scatter(path, vectors, timestamp=False):
    fig, axes = plt.subplots(2, 3, figsize=(12, 7.5))
    for ax, (yk, xk) in zip(axes.ravel(), _PAIRS):
        ax.scatter([getattr(v, xk) for v in vectors], [getattr(v, yk) for v in vectors], s=4)
        ax.set_xlabel(xk)
        ax.set_ylabel(yk)
    fig.tight_layout()
    _save(fig, path, timestamp)


def _scatter3d(path, xyz, colors, title, timestamp):
    fig = plt.figure(figsize=(6, 6))
    ax = fig.add_subplot(projection="3d")
    ax.scatter(xyz[:, 0], xyz[:, 1], xyz[:, 2], c=colors, s=5)
    ax.set_xlabel("i_sc")
    ax.set_ylabel("i_pc")
    ax.set_zlabel("i_hc")
    ax.set_title(title)
    _save(fig, path, timestamp)


def write_report_figures(directory, vectors, assignments, timestamp=False):
    d = Path(directory)
    pairwise_scatter(d / "influence_pairs.svg", vectors, timestamp)
    by_user = {a.user_id: a for a in assignments}
    xyz = np.array([[v.i_sc, v.i_pc, v.i_hc] for v in vectors]).reshape(-1, 3)
    fingered = [i for i, v in enumerate(vectors) if by_user[v.user_id].finger is not None]
    palette = plt.get_cmap("tab10")
    colors = [palette(by_user[vectors[i].user_id].finger % 10) for i in fingered]
    pts = xyz[fingered]
    _scatter3d(d / "fingers.svg", pts, colors, "fingers", timestamp)
    unit = pts / np.linalg.norm(pts, axis=1, keepdims=True) if len(pts) else pts
    _scatter3d(d / "fingers_unit_sphere.svg", unit, colors, "fingers on the unit sphere", timestamp)
    class_colors = [_CLASS_COLORS[by_user[v.user_id].influence_class] for v in vectors]
    _scatter3d(d / "influence_classes.svg", xyz, class_colors, "influence classes", timestamp)
