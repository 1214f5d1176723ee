"""Elevation grids, slope-based traversability analysis, and surface attitude queries.

The mission site is a uniform block grid of elevations (default 600x600 blocks at
0.25 m, i.e. a 150 m x 150 m site). Terrain is classified from the worst-case
slope against the 8 neighbouring blocks:

    traversable   slope < 10 deg
    high risk     10 deg <= slope < 15 deg
    impassable    slope >= 15 deg

Grids are stored row-major with row 0 at minimum y; world coordinates are metres
with the grid origin at the lower-left corner. All types are immutable after
construction and all operations are pure functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from typing import NamedTuple

import numpy as np
from scipy.ndimage import gaussian_filter


class DemFormatError(ValueError):
    """Raised when a DEM file cannot be parsed."""


class TerrainClass(IntEnum):
    TRAVERSABLE = 0
    HIGH_RISK = 1
    IMPASSABLE = 2


@dataclass(frozen=True)
class DemGrid:
    """Uniform elevation raster.

    Attributes
    ----------
    origin : (float, float)
        World coordinates (m) of the lower-left corner of the grid.
    cell_size : float
        Edge length of one block (m).
    elevation : np.ndarray
        Elevations (m), shape (height, width), row 0 at minimum y.
    """

    origin: tuple[float, float]
    cell_size: float
    elevation: np.ndarray

    def __post_init__(self):
        elev = np.asarray(self.elevation, dtype=float)
        if elev.ndim != 2 or elev.shape[0] < 1 or elev.shape[1] < 1:
            raise ValueError(f"elevation must be a non-empty 2D array, got shape {elev.shape}")
        if self.cell_size <= 0:
            raise ValueError(f"cell_size must be positive, got {self.cell_size}")
        if not np.all(np.isfinite(elev)):
            raise ValueError("elevation contains non-finite values")
        elev.flags.writeable = False
        object.__setattr__(self, "elevation", elev)

    @property
    def width(self) -> int:
        return self.elevation.shape[1]

    @property
    def height(self) -> int:
        return self.elevation.shape[0]

    @property
    def extent(self) -> tuple[float, float]:
        """World extent (x span, y span) in metres."""
        return (self.width * self.cell_size, self.height * self.cell_size)

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        """(xmin, ymin, xmax, ymax) of the covered area."""
        ox, oy = self.origin
        return (ox, oy, ox + self.width * self.cell_size, oy + self.height * self.cell_size)

    def contains(self, x: float, y: float) -> bool:
        xmin, ymin, xmax, ymax = self.bounds
        return xmin <= x <= xmax and ymin <= y <= ymax

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        """(row, col) of the block containing world point (x, y)."""
        ox, oy = self.origin
        col = min(max(int((x - ox) / self.cell_size), 0), self.width - 1)
        row = min(max(int((y - oy) / self.cell_size), 0), self.height - 1)
        return row, col

    def _patch(self, x: float, y: float):
        # Bilinear patch between the 4 surrounding block centers; coordinates
        # are clamped onto the center lattice so border queries stay defined.
        cs = self.cell_size
        u = (x - self.origin[0]) / cs - 0.5
        v = (y - self.origin[1]) / cs - 0.5
        u = min(max(u, 0.0), self.width - 1.0)
        v = min(max(v, 0.0), self.height - 1.0)
        j0 = min(int(u), max(self.width - 2, 0))
        i0 = min(int(v), max(self.height - 2, 0))
        fx = u - j0
        fy = v - i0
        z = self.elevation
        j1 = min(j0 + 1, self.width - 1)
        i1 = min(i0 + 1, self.height - 1)
        return (float(z[i0, j0]), float(z[i0, j1]), float(z[i1, j0]), float(z[i1, j1]), fx, fy)

    def height_at(self, x: float, y: float) -> float:
        """Bilinearly interpolated elevation at world point (x, y)."""
        if not self.contains(x, y):
            raise ValueError(f"query ({x}, {y}) outside grid bounds {self.bounds}")
        z_bl, z_br, z_tl, z_tr, fx, fy = self._patch(x, y)
        return (z_bl * (1 - fx) * (1 - fy) + z_br * fx * (1 - fy)
                + z_tl * (1 - fx) * fy + z_tr * fx * fy)

    def gradient_at(self, x: float, y: float) -> tuple[float, float]:
        """(dz/dx, dz/dy) of the bilinear surface at world point (x, y)."""
        if not self.contains(x, y):
            raise ValueError(f"query ({x}, {y}) outside grid bounds {self.bounds}")
        z_bl, z_br, z_tl, z_tr, fx, fy = self._patch(x, y)
        gx = ((z_br - z_bl) * (1 - fy) + (z_tr - z_tl) * fy) / self.cell_size
        gy = ((z_tl - z_bl) * (1 - fx) + (z_tr - z_br) * fx) / self.cell_size
        return gx, gy


@dataclass(frozen=True)
class TraversabilityThresholds:
    """Slope thresholds (degrees) separating the three terrain classes."""

    high_risk_deg: float = 10.0
    impassable_deg: float = 15.0

    def __post_init__(self):
        if not (0.0 < self.high_risk_deg < self.impassable_deg <= 90.0):
            raise ValueError(
                f"thresholds must satisfy 0 < high_risk < impassable <= 90, "
                f"got {self.high_risk_deg}, {self.impassable_deg}"
            )


@dataclass(frozen=True)
class TraversabilityMap:
    """Per-block terrain class and the worst-case slope it was derived from."""

    classes: np.ndarray
    worst_slope_deg: np.ndarray
    thresholds: TraversabilityThresholds
    origin: tuple[float, float] = (0.0, 0.0)
    cell_size: float = 1.0

    def __post_init__(self):
        classes = np.asarray(self.classes, dtype=np.int8)
        slopes = np.asarray(self.worst_slope_deg, dtype=float)
        if classes.shape != slopes.shape:
            raise ValueError("classes and worst_slope_deg must have the same shape")
        classes.flags.writeable = False
        slopes.flags.writeable = False
        object.__setattr__(self, "classes", classes)
        object.__setattr__(self, "worst_slope_deg", slopes)

    @property
    def shape(self) -> tuple[int, int]:
        return self.classes.shape

    def class_at(self, x: float, y: float) -> TerrainClass:
        """Terrain class of the block containing world point (x, y)."""
        h, w = self.classes.shape
        col = min(max(int((x - self.origin[0]) / self.cell_size), 0), w - 1)
        row = min(max(int((y - self.origin[1]) / self.cell_size), 0), h - 1)
        return TerrainClass(int(self.classes[row, col]))


class PoseOnTerrain(NamedTuple):
    """Surface-slaved pose: position on the terrain plus attitude for a heading."""

    position: tuple[float, float, float]
    pitch_deg: float
    roll_deg: float
    heading_deg: float


class ClassFractions(NamedTuple):
    traversable_pct: float
    high_risk_pct: float
    impassable_pct: float


def load_dem(path) -> DemGrid:
    """Load a DEM from a plain-text ASCII grid file.

    Format: one header line ``ncols <int> nrows <int> cellsize <float>
    xll <float> yll <float>`` followed by nrows lines of ncols space-separated
    elevations in metres, row 0 at minimum y.
    """
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().split()
        if len(header) != 10:
            raise DemFormatError(f"{path}: header must have 5 key/value pairs, got {header}")
        keys = header[0::2]
        if keys != ["ncols", "nrows", "cellsize", "xll", "yll"]:
            raise DemFormatError(f"{path}: unexpected header keys {keys}")
        try:
            ncols = int(header[1])
            nrows = int(header[3])
            cellsize = float(header[5])
            xll = float(header[7])
            yll = float(header[9])
        except ValueError as exc:
            raise DemFormatError(f"{path}: malformed header value: {exc}") from exc
        if ncols <= 0 or nrows <= 0:
            raise DemFormatError(f"{path}: grid dimensions must be positive, got {ncols}x{nrows}")
        if cellsize <= 0:
            raise DemFormatError(f"{path}: cellsize must be positive, got {cellsize}")

        rows = []
        for i in range(nrows):
            line = fh.readline()
            if not line:
                raise DemFormatError(f"{path}: expected {nrows} data rows, file ended at row {i}")
            values = line.split()
            if len(values) != ncols:
                raise DemFormatError(
                    f"{path}: row {i} has {len(values)} values, expected {ncols}"
                )
            try:
                rows.append([float(v) for v in values])
            except ValueError as exc:
                raise DemFormatError(f"{path}: row {i}: non-numeric value: {exc}") from exc

    elevation = np.array(rows, dtype=float)
    if not np.all(np.isfinite(elevation)):
        raise DemFormatError(f"{path}: elevation contains non-finite values")
    return DemGrid(origin=(xll, yll), cell_size=cellsize, elevation=elevation)


def save_dem(dem: DemGrid, path) -> None:
    """Write a DEM in the ASCII grid format accepted by :func:`load_dem`."""
    ox, oy = dem.origin
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"ncols {dem.width} nrows {dem.height} cellsize {dem.cell_size!r} "
                 f"xll {ox!r} yll {oy!r}\n")
        for row in dem.elevation:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def synth_terrain(seed: int, width: int, height: int, cell_size: float,
                  amplitude: float = 1.0, smoothness: float = 10.0,
                  octaves: int = 3, origin: tuple[float, float] = (0.0, 0.0)) -> DemGrid:
    """Generate a smooth synthetic DEM from seeded band-limited noise.

    The field is a sum of Gaussian-smoothed white-noise octaves with halving
    correlation length and decaying weight, rescaled so that ``amplitude`` is
    roughly the RMS elevation in metres. ``smoothness`` is the correlation
    length (m) of the dominant octave. Deterministic for a fixed seed;
    ``amplitude`` 0 yields a flat grid.
    """
    if width <= 0 or height <= 0:
        raise ValueError(f"grid dimensions must be positive, got {width}x{height}")
    if cell_size <= 0:
        raise ValueError(f"cell_size must be positive, got {cell_size}")
    if octaves < 1:
        raise ValueError("octaves must be >= 1")

    rng = np.random.default_rng(seed)
    total = np.zeros((height, width))
    weight = 1.0
    weight_sum = 0.0
    sigma_cells = smoothness / cell_size
    for k in range(octaves):
        noise = rng.standard_normal((height, width))
        layer = gaussian_filter(noise, sigma=max(sigma_cells / 2**k, 0.5), mode="reflect")
        std = float(layer.std())
        if std > 0.0:
            layer = layer / std
        total += weight * layer
        weight_sum += weight
        weight *= 0.4
    total *= amplitude / weight_sum
    return DemGrid(origin=origin, cell_size=cell_size, elevation=total)


# Neighbor offsets (drow, dcol) and centre distances in units of cell_size.
_NEIGHBORS = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]
_SQRT2 = math.sqrt(2.0)


def slope_map(dem: DemGrid) -> np.ndarray:
    """Worst-case slope (degrees) of each block against its 8 neighbours.

    The slope to a neighbour is atan(|dz| / d) with d the centre distance
    (cell_size, or cell_size*sqrt(2) diagonally). Border blocks use only the
    neighbours that exist.
    """
    z = dem.elevation
    h, w = z.shape
    worst = np.zeros((h, w))
    for di, dj in _NEIGHBORS:
        dist = dem.cell_size * (_SQRT2 if di != 0 and dj != 0 else 1.0)
        # Overlapping slices: dst region of the grid and the shifted src region.
        dst_i = slice(max(di, 0), h + min(di, 0))
        dst_j = slice(max(dj, 0), w + min(dj, 0))
        src_i = slice(max(-di, 0), h + min(-di, 0))
        src_j = slice(max(-dj, 0), w + min(-dj, 0))
        slope = np.degrees(np.arctan(np.abs(z[src_i, src_j] - z[dst_i, dst_j]) / dist))
        np.maximum(worst[dst_i, dst_j], slope, out=worst[dst_i, dst_j])
    return worst


def classify(slopes: np.ndarray, thresholds: TraversabilityThresholds,
             *, origin: tuple[float, float] = (0.0, 0.0),
             cell_size: float = 1.0) -> TraversabilityMap:
    """Classify per-block slopes into terrain classes (boundary inclusive)."""
    slopes = np.asarray(slopes, dtype=float)
    if not np.all(np.isfinite(slopes)):
        raise ValueError("slopes contain non-finite values")
    classes = np.full(slopes.shape, TerrainClass.TRAVERSABLE, dtype=np.int8)
    classes[slopes >= thresholds.high_risk_deg] = TerrainClass.HIGH_RISK
    classes[slopes >= thresholds.impassable_deg] = TerrainClass.IMPASSABLE
    return TraversabilityMap(classes=classes, worst_slope_deg=slopes,
                             thresholds=thresholds, origin=origin, cell_size=cell_size)


def traversability(dem: DemGrid,
                   thresholds: TraversabilityThresholds | None = None) -> TraversabilityMap:
    """Slope analysis and classification of a DEM in one step."""
    thresholds = thresholds or TraversabilityThresholds()
    return classify(slope_map(dem), thresholds, origin=dem.origin, cell_size=dem.cell_size)


def terrain_stats(tmap: TraversabilityMap) -> ClassFractions:
    """Percentage of blocks in each terrain class (sums to 100)."""
    n = tmap.classes.size
    if n == 0:
        raise ValueError("empty traversability map")
    counts = np.bincount(tmap.classes.ravel(), minlength=3)
    return ClassFractions(*(100.0 * counts[:3] / n))


def surface_query(dem: DemGrid, x: float, y: float, heading_deg: float) -> PoseOnTerrain:
    """Pose on the terrain surface at (x, y) for a given heading.

    Pitch is the surface inclination along the heading (positive = nose up when
    ascending); roll is the inclination across it (positive = terrain higher on
    the right-hand side). Both follow from the bilinear patch gradient.
    """
    z = dem.height_at(x, y)
    gx, gy = dem.gradient_at(x, y)
    hdg = math.radians(heading_deg)
    ch, sh = math.cos(hdg), math.sin(hdg)
    pitch = math.degrees(math.atan(gx * ch + gy * sh))
    roll = math.degrees(math.atan(gx * sh - gy * ch))
    return PoseOnTerrain(position=(x, y, z), pitch_deg=pitch, roll_deg=roll,
                         heading_deg=heading_deg)


def surface_state(dem: DemGrid, x: float, y: float,
                  heading_deg: float) -> tuple[float, float, float, float, float]:
    """(z, pitch_deg, roll_deg, dz/dx, dz/dy) at (x, y) from one patch lookup.

    Same conventions as surface_query; meant for per-step pose slaving where
    the caller also wants the raw gradient.
    """
    if not dem.contains(x, y):
        raise ValueError(f"query ({x}, {y}) outside grid bounds {dem.bounds}")
    z_bl, z_br, z_tl, z_tr, fx, fy = dem._patch(x, y)
    z = (z_bl * (1 - fx) * (1 - fy) + z_br * fx * (1 - fy)
         + z_tl * (1 - fx) * fy + z_tr * fx * fy)
    gx = ((z_br - z_bl) * (1 - fy) + (z_tr - z_tl) * fy) / dem.cell_size
    gy = ((z_tl - z_bl) * (1 - fx) + (z_tr - z_br) * fx) / dem.cell_size
    hdg = math.radians(heading_deg)
    ch, sh = math.cos(hdg), math.sin(hdg)
    pitch = math.degrees(math.atan(gx * ch + gy * sh))
    roll = math.degrees(math.atan(gx * sh - gy * ch))
    return z, pitch, roll, gx, gy


def surface_attitude_many(dem: DemGrid, x: np.ndarray, y: np.ndarray,
                          heading_deg: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised pitch/roll (degrees) at points (x, y) for per-point headings."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    cs = dem.cell_size
    u = np.clip((x - dem.origin[0]) / cs - 0.5, 0.0, dem.width - 1.0)
    v = np.clip((y - dem.origin[1]) / cs - 0.5, 0.0, dem.height - 1.0)
    j0 = np.minimum(u.astype(int), max(dem.width - 2, 0))
    i0 = np.minimum(v.astype(int), max(dem.height - 2, 0))
    fx = u - j0
    fy = v - i0
    j1 = np.minimum(j0 + 1, dem.width - 1)
    i1 = np.minimum(i0 + 1, dem.height - 1)
    z = dem.elevation
    z_bl, z_br = z[i0, j0], z[i0, j1]
    z_tl, z_tr = z[i1, j0], z[i1, j1]
    gx = ((z_br - z_bl) * (1 - fy) + (z_tr - z_tl) * fy) / cs
    gy = ((z_tl - z_bl) * (1 - fx) + (z_tr - z_br) * fx) / cs
    hdg = np.radians(np.asarray(heading_deg, dtype=float))
    pitch = np.degrees(np.arctan(gx * np.cos(hdg) + gy * np.sin(hdg)))
    roll = np.degrees(np.arctan(gx * np.sin(hdg) - gy * np.cos(hdg)))
    return pitch, roll
