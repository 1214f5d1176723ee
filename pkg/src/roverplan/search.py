"""Target generation on the rasterized probability map.

Greedy local hill climbing over the 8-neighborhood, with two refinements:
ties on cell value are broken by the 3x3 box-blur convolved value, and the
whole climb is re-run after each step of a uniform "warming" decrement so the
planner can escape the first local maximum it finds. Every visited cell is
zeroed in the working map on departure, which discourages (but does not
forbid) revisits. All candidate paths are scored against the original,
unwarmed map and the best one is returned.

Deterministic throughout: residual ties fall back to the lowest row-major
cell index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pdm import SearchGrid, WarmingSchedule, conv_value, warm

# 8-neighborhood offsets in ascending (row, col) order; this is the fixed
# deterministic scan order for residual ties.
_STEPS = ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1))


@dataclass(frozen=True)
class CellPath:
    """Ordered cell visits (including the start cell) of one climb."""

    cells: tuple[tuple[int, int], ...]
    budget: int

    def __post_init__(self):
        if not self.cells:
            raise ValueError("path needs at least the start cell")
        if len(self.cells) > self.budget + 1:
            raise ValueError(f"path of {len(self.cells)} cells exceeds budget {self.budget}")
        for (r0, c0), (r1, c1) in zip(self.cells, self.cells[1:]):
            if max(abs(r1 - r0), abs(c1 - c0)) != 1:
                raise ValueError(f"cells ({r0},{c0}) -> ({r1},{c1}) are not 8-neighbors")

    @property
    def start(self) -> tuple[int, int]:
        return self.cells[0]


@dataclass(frozen=True)
class TargetList:
    """World-coordinate targets (cell centres of the winning path) and score."""

    waypoints: tuple[tuple[float, float], ...]
    cells: tuple[tuple[int, int], ...]
    score: float
    warming_step: int

    def __post_init__(self):
        if self.score < 0:
            raise ValueError(f"score must be non-negative, got {self.score}")


def _values_of(grid) -> np.ndarray:
    return grid.values if isinstance(grid, SearchGrid) else np.asarray(grid, dtype=float)


def lhc_step(working: np.ndarray, current: tuple[int, int]) -> tuple[int, int]:
    """One hill-climbing move on the working value array (mutated in place).

    Picks the in-bounds 8-neighbor with the highest value; ties go to the
    highest box-blur convolved value, then to the lowest row-major index.
    The departed cell is zeroed after the move.
    """
    h, w = working.shape
    row, col = current
    if not (0 <= row < h and 0 <= col < w):
        raise IndexError(f"current cell {current} outside {h}x{w} grid")

    best_val = None
    tied: list[tuple[int, int]] = []
    for dr, dc in _STEPS:
        r, c = row + dr, col + dc
        if not (0 <= r < h and 0 <= c < w):
            continue
        v = float(working[r, c])
        if best_val is None or v > best_val:
            best_val = v
            tied = [(r, c)]
        elif v == best_val:
            tied.append((r, c))
    if best_val is None:
        raise ValueError("current cell has no in-bounds neighbors")

    if len(tied) == 1:
        nxt = tied[0]
    else:
        nxt = tied[0]
        best_conv = conv_value(working, nxt)
        for cell in tied[1:]:
            cv = conv_value(working, cell)
            if cv > best_conv:
                best_conv = cv
                nxt = cell
    working[row, col] = 0.0
    return nxt


def lhc_path(grid, start: tuple[int, int], budget: int) -> CellPath:
    """Run ``budget`` hill-climbing steps from ``start`` on a working copy."""
    if budget < 1:
        raise ValueError(f"budget must be >= 1, got {budget}")
    values = _values_of(grid)
    h, w = values.shape
    if not (0 <= start[0] < h and 0 <= start[1] < w):
        raise IndexError(f"start cell {start} outside {h}x{w} grid")
    working = values.copy()
    cells = [start]
    current = start
    for _ in range(budget):
        current = lhc_step(working, current)
        cells.append(current)
    return CellPath(cells=tuple(cells), budget=budget)


def accumulated_probability(path, grid) -> float:
    """Sum of original-map values over the distinct cells of a path.

    Revisited cells count once. Summation runs in row-major cell order so the
    result is bit-reproducible.
    """
    values = _values_of(grid)
    h, w = values.shape
    cells = path.cells if isinstance(path, CellPath) else tuple(path)
    total = 0.0
    for row, col in sorted(set(cells)):
        if not (0 <= row < h and 0 <= col < w):
            raise IndexError(f"path cell ({row},{col}) outside {h}x{w} grid")
        total += float(values[row, col])
    return total


def lhc_gw_conv(grid: SearchGrid, start: tuple[int, int], budget: int,
                warming_steps: int) -> TargetList:
    """Best hill-climbing path across the warming schedule.

    Generates one candidate on the unwarmed map and one after each of the
    ``warming_steps`` cumulative decrements (decrement fixed at original peak
    / steps), scores all of them against the original map, and returns the
    highest-scoring path as world-coordinate targets. Ties prefer fewer
    warming steps.
    """
    if warming_steps < 1:
        raise ValueError(f"warming_steps must be >= 1, got {warming_steps}")
    schedule = WarmingSchedule.for_grid(grid, warming_steps)

    best_path = None
    best_score = -1.0
    best_step = 0
    working = grid
    for step in range(warming_steps + 1):
        if step > 0:
            working = warm(working, schedule.decrement)
        path = lhc_path(working, start, budget)
        score = accumulated_probability(path, grid)
        if score > best_score:
            best_path = path
            best_score = score
            best_step = step

    waypoints = tuple(grid.cell_center(r, c) for r, c in best_path.cells)
    return TargetList(waypoints=waypoints, cells=best_path.cells,
                      score=best_score, warming_step=best_step)


def save_targets_csv(targets: TargetList, path) -> None:
    """Write targets as CSV (index, x_m, y_m) with the score on a header line."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"# score={targets.score!r} warming_step={targets.warming_step}\n")
        fh.write("index,x_m,y_m\n")
        for i, (x, y) in enumerate(targets.waypoints):
            fh.write(f"{i},{x!r},{y!r}\n")


def load_targets_csv(path) -> TargetList:
    """Read a target file written by :func:`save_targets_csv`.

    Cell indices are not stored in the file, so the returned list carries an
    empty ``cells`` tuple.
    """
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip()
        if not header.startswith("# score="):
            raise ValueError(f"{path}: missing score header line")
        fields = dict(part.split("=", 1) for part in header[2:].split())
        score = float(fields["score"])
        warming_step = int(fields.get("warming_step", 0))
        fh.readline()  # column header
        waypoints = []
        for line in fh:
            if not line.strip():
                continue
            _, x, y = line.split(",")
            waypoints.append((float(x), float(y)))
    return TargetList(waypoints=tuple(waypoints), cells=(), score=score,
                      warming_step=warming_step)
