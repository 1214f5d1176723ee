"""Probability distribution maps: Gaussian mixtures over the mission site.

A PDM is a uniform-weight mixture of bivariate Gaussians giving the probability
density of a point of interest at each map location. For planning it is
rasterized onto a coarse search grid (one cell per team search footprint,
default 5 m), on which the search planner operates with two primitives: a
3x3 normalized box-blur convolution used for tie-breaking, and a "warming"
decrement that uniformly lowers the map to push hill climbing out of local
maxima.

Pdm and SearchGrid are immutable snapshots; warming returns a new grid.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi

# Fixed 3x3 normalized box blur kernel: all entries 1/9.
BOX_BLUR_KERNEL = np.full((3, 3), 1.0 / 9.0)
BOX_BLUR_KERNEL.flags.writeable = False


@dataclass(frozen=True)
class Gaussian2D:
    """One mixture component: mean location (m) and 2x2 covariance (m^2)."""

    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float).reshape(2)
        sigma = np.asarray(self.sigma, dtype=float).reshape(2, 2)
        if abs(sigma[0, 1] - sigma[1, 0]) > 1e-9:
            raise ValueError(f"covariance must be symmetric, got {sigma}")
        det = sigma[0, 0] * sigma[1, 1] - sigma[0, 1] * sigma[1, 0]
        if det <= 0 or sigma[0, 0] <= 0 or sigma[1, 1] <= 0:
            raise ValueError(f"covariance must be positive definite, got {sigma}")
        mu.flags.writeable = False
        sigma.flags.writeable = False
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)

    @property
    def det(self) -> float:
        s = self.sigma
        return float(s[0, 0] * s[1, 1] - s[0, 1] * s[1, 0])

    @property
    def sigma_inv(self) -> np.ndarray:
        s = self.sigma
        return np.array([[s[1, 1], -s[0, 1]], [-s[1, 0], s[0, 0]]]) / self.det


@dataclass(frozen=True)
class Pdm:
    """Uniform-weight mixture of bivariate Gaussians; integrates to 1."""

    components: tuple[Gaussian2D, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        if len(comps) < 1:
            raise ValueError("mixture needs at least one component")
        object.__setattr__(self, "components", comps)

    @property
    def g(self) -> int:
        return len(self.components)


def random_pdm(seed: int, g: int, bounds: tuple[float, float, float, float],
               eig_range: tuple[float, float] = (4.0, 100.0)) -> Pdm:
    """Seeded random mixture with means inside ``bounds`` (xmin, ymin, xmax, ymax).

    Covariances are built as R diag(l1, l2) R^T with a seeded rotation R and
    eigenvalues drawn uniformly from ``eig_range`` (m^2), which guarantees
    positive definiteness by construction.
    """
    if g < 1:
        raise ValueError(f"component count must be >= 1, got {g}")
    xmin, ymin, xmax, ymax = bounds
    if xmax <= xmin or ymax <= ymin:
        raise ValueError(f"degenerate bounds {bounds}")
    lo, hi = eig_range
    if lo <= 0 or hi < lo:
        raise ValueError(f"eigenvalue range must be positive, got {eig_range}")

    rng = np.random.default_rng(seed)
    comps = []
    for _ in range(g):
        mu = np.array([rng.uniform(xmin, xmax), rng.uniform(ymin, ymax)])
        lam = rng.uniform(lo, hi, size=2)
        ang = rng.uniform(0.0, math.pi)
        c, s = math.cos(ang), math.sin(ang)
        rot = np.array([[c, -s], [s, c]])
        sigma = rot @ np.diag(lam) @ rot.T
        sigma = 0.5 * (sigma + sigma.T)  # kill rounding asymmetry
        comps.append(Gaussian2D(mu=mu, sigma=sigma))
    return Pdm(components=tuple(comps))


def eval_p(pdm: Pdm, x) -> float:
    """Mixture density (1/m^2) at a single point."""
    return float(eval_p_many(pdm, np.asarray(x, dtype=float).reshape(1, 2))[0])


def eval_p_many(pdm: Pdm, points: np.ndarray) -> np.ndarray:
    """Mixture density at each row of ``points`` (n, 2)."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    total = np.zeros(len(pts))
    for comp in pdm.components:
        d = pts - comp.mu
        inv = comp.sigma_inv
        expo = -0.5 * (d[:, 0] ** 2 * inv[0, 0]
                       + 2.0 * d[:, 0] * d[:, 1] * inv[0, 1]
                       + d[:, 1] ** 2 * inv[1, 1])
        total += np.exp(expo) / (TWO_PI * math.sqrt(comp.det))
    return total / pdm.g


@dataclass(frozen=True)
class SearchGrid:
    """Cell-rasterized PDM: per-cell probability mass on a uniform grid.

    values[row, col] holds density at the cell centre times cell area, with
    row 0 at minimum y.
    """

    origin: tuple[float, float]
    cell_size: float
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.size == 0:
            raise ValueError(f"values must be a non-empty 2D array, got shape {values.shape}")
        if self.cell_size <= 0:
            raise ValueError(f"cell_size must be positive, got {self.cell_size}")
        if np.any(values < 0):
            raise ValueError("cell values must be non-negative")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]

    @property
    def total_mass(self) -> float:
        return float(self.values.sum())

    def cell_center(self, row: int, col: int) -> tuple[float, float]:
        return (self.origin[0] + (col + 0.5) * self.cell_size,
                self.origin[1] + (row + 0.5) * self.cell_size)

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        col = min(max(int((x - self.origin[0]) / self.cell_size), 0), self.n_cols - 1)
        row = min(max(int((y - self.origin[1]) / self.cell_size), 0), self.n_rows - 1)
        return row, col

    def in_bounds(self, row: int, col: int) -> bool:
        return 0 <= row < self.n_rows and 0 <= col < self.n_cols


def rasterize(pdm: Pdm, bounds: tuple[float, float, float, float],
              cell_size: float) -> SearchGrid:
    """Rasterize a PDM onto cells of edge ``cell_size`` tiling ``bounds`` exactly."""
    if cell_size <= 0:
        raise ValueError(f"cell_size must be positive, got {cell_size}")
    xmin, ymin, xmax, ymax = bounds
    nx = (xmax - xmin) / cell_size
    ny = (ymax - ymin) / cell_size
    if abs(nx - round(nx)) > 1e-9 or abs(ny - round(ny)) > 1e-9:
        raise ValueError(f"bounds {bounds} are not an integer number of {cell_size} m cells")
    nx, ny = int(round(nx)), int(round(ny))
    if nx < 1 or ny < 1:
        raise ValueError(f"bounds {bounds} too small for cell_size {cell_size}")

    cx = xmin + (np.arange(nx) + 0.5) * cell_size
    cy = ymin + (np.arange(ny) + 0.5) * cell_size
    xx, yy = np.meshgrid(cx, cy)
    density = eval_p_many(pdm, np.column_stack([xx.ravel(), yy.ravel()]))
    values = density.reshape(ny, nx) * cell_size**2
    return SearchGrid(origin=(xmin, ymin), cell_size=cell_size, values=values)


def conv_value(grid, cell: tuple[int, int]) -> float:
    """Box-blur convolved value of one cell; outside-grid taps contribute 0.

    Accepts a SearchGrid or a bare 2D value array. Taps are accumulated in
    row-major window order so the result is bit-reproducible.
    """
    values = grid.values if isinstance(grid, SearchGrid) else np.asarray(grid)
    row, col = cell
    h, w = values.shape
    if not (0 <= row < h and 0 <= col < w):
        raise IndexError(f"cell {cell} outside {h}x{w} grid")
    acc = 0.0
    for r in range(row - 1, row + 2):
        if r < 0 or r >= h:
            continue
        for c in range(col - 1, col + 2):
            if c < 0 or c >= w:
                continue
            acc += (1.0 / 9.0) * float(values[r, c])
    return acc


@dataclass(frozen=True)
class WarmingSchedule:
    """Uniform decrement schedule: ``steps`` subtractions of ``peak / steps``."""

    steps: int
    peak: float

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if self.peak < 0:
            raise ValueError(f"peak must be non-negative, got {self.peak}")

    @property
    def decrement(self) -> float:
        return self.peak / self.steps

    @classmethod
    def for_grid(cls, grid: SearchGrid, steps: int) -> "WarmingSchedule":
        return cls(steps=steps, peak=float(grid.values.max()))


def warm(grid: SearchGrid, decrement: float) -> SearchGrid:
    """One warming step: subtract ``decrement`` where value exceeds it, else 0."""
    if decrement < 0:
        raise ValueError(f"decrement must be non-negative, got {decrement}")
    values = np.where(grid.values > decrement, grid.values - decrement, 0.0)
    return SearchGrid(origin=grid.origin, cell_size=grid.cell_size, values=values)


def save_pdm(pdm: Pdm, path) -> None:
    """Write mixture components as JSON: [{"mu": [x, y], "sigma": [[a,b],[b,c]]}]."""
    data = [{"mu": comp.mu.tolist(), "sigma": comp.sigma.tolist()}
            for comp in pdm.components]
    with open(path, "w", encoding="ascii") as fh:
        json.dump(data, fh, indent=2)
        fh.write("\n")


def load_pdm(path) -> Pdm:
    """Read a mixture from the JSON scenario format written by :func:`save_pdm`."""
    with open(path, "r", encoding="ascii") as fh:
        data = json.load(fh)
    if not isinstance(data, list) or not data:
        raise ValueError(f"{path}: expected a non-empty list of components")
    comps = tuple(Gaussian2D(mu=np.array(item["mu"]), sigma=np.array(item["sigma"]))
                  for item in data)
    return Pdm(components=comps)


def save_grid_csv(grid: SearchGrid, path) -> None:
    """Export the cell values as a CSV matrix (row 0 = minimum y)."""
    with open(path, "w", encoding="ascii") as fh:
        for row in grid.values:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
