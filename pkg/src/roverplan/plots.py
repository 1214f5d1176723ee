"""Vector-figure rendering of mission artifacts.

All figures are written as SVG with hashed ids salted by a fixed string and
no embedded date, so rerunning a mission reproduces byte-identical files.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.colors import BoundaryNorm, ListedColormap  # noqa: E402

_SVG_META = {"Date": None}
_CLASS_COLORS = ListedColormap(["white", "red", "black"])
_CLASS_NORM = BoundaryNorm([-0.5, 0.5, 1.5, 2.5], 3)


def _new_figure():
    plt.rcParams["svg.hashsalt"] = "roverplan"
    return plt.subplots(figsize=(7.0, 6.0), dpi=100)


def _save(fig, path) -> None:
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)


def plot_pdm(grid, targets=None, path="pdm.svg") -> None:
    """Heatmap of the rasterized belief map, optionally with the target chain."""
    fig, ax = _new_figure()
    x0, y0 = grid.origin
    extent = (x0, x0 + grid.n_cols * grid.cell_size,
              y0, y0 + grid.n_rows * grid.cell_size)
    im = ax.imshow(grid.values, origin="lower", extent=extent, cmap="viridis")
    fig.colorbar(im, ax=ax, label="cell probability mass")
    if targets is not None:
        wp = np.asarray(targets.waypoints)
        ax.plot(wp[:, 0], wp[:, 1], "w.-", lw=1.0, ms=4)
        ax.plot(wp[0, 0], wp[0, 1], "ws", ms=7, mfc="none")
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    ax.set_title("belief map and planned targets")
    _save(fig, path)


def plot_traversability(trav, path="terrain.svg") -> None:
    """Class map: traversable white, high-risk red, impassable black."""
    fig, ax = _new_figure()
    h, w = trav.shape
    x0, y0 = trav.origin
    extent = (x0, x0 + w * trav.cell_size, y0, y0 + h * trav.cell_size)
    ax.imshow(trav.classes, origin="lower", extent=extent,
              cmap=_CLASS_COLORS, norm=_CLASS_NORM, interpolation="nearest")
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    ax.set_title("terrain classes (white/red/black = go/risk/no-go)")
    _save(fig, path)


def plot_trajectories(trav, trajectories, search_radius_m: float,
                      path="trajectories.svg", stride: int = 20) -> None:
    """Rover tracks over the class map, with the swept search buffer."""
    fig, ax = _new_figure()
    h, w = trav.shape
    x0, y0 = trav.origin
    extent = (x0, x0 + w * trav.cell_size, y0, y0 + h * trav.cell_size)
    ax.imshow(trav.classes, origin="lower", extent=extent,
              cmap=_CLASS_COLORS, norm=_CLASS_NORM, interpolation="nearest",
              alpha=0.45)
    for traj in trajectories:
        xy = traj.xy
        pts = xy[::stride]
        ax.scatter(pts[:, 0], pts[:, 1],
                   s=(search_radius_m * 14) ** 2, marker="o",
                   color="tab:cyan", alpha=0.08, linewidths=0)
        ax.plot(xy[:, 0], xy[:, 1], lw=1.0,
                label=f"rover {traj.rover_id}")
    ax.legend(loc="upper right", fontsize=8)
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    ax.set_title("coordinated trajectories and search buffer")
    _save(fig, path)


def plot_curves(curves: dict, path="curve.svg") -> None:
    """Accumulated probability mass against mean per-rover distance."""
    fig, ax = _new_figure()
    for label, curve in curves.items():
        c = np.asarray(curve)
        ax.plot(c[:, 0], c[:, 1], label=label)
    ax.set_xlabel("mean distance travelled per rover (m)")
    ax.set_ylabel("accumulated probability mass")
    ax.set_title("coverage against distance")
    ax.legend(loc="lower right")
    ax.grid(True, alpha=0.3)
    _save(fig, path)


def render_plots(result, out_dir) -> list[str]:
    """Write the standard figure set for one mission; returns file paths."""
    os.makedirs(out_dir, exist_ok=True)
    files = {
        "pdm.svg": lambda p: plot_pdm(result.grid, result.targets, p),
        "terrain.svg": lambda p: plot_traversability(result.trav, p),
        "trajectories.svg": lambda p: plot_trajectories(
            result.trav, result.plan.trajectories,
            result.config.rover.search_radius_m, p),
        "curve.svg": lambda p: plot_curves(
            {f"{result.plan.n_rovers} rovers": result.curve}, p),
    }
    written = []
    for name, fn in files.items():
        target = os.path.join(out_dir, name)
        fn(target)
        written.append(target)
    return written
