"""Independent brute-force reference implementations used by the tests.

Everything here is written directly from the documented rules, on plain
arrays and Python scalars, without calling into the package's planner or
coordination code. Tests compare package output against these.
"""
import math

import numpy as np


def conv3x3_zero_padded(values: np.ndarray, row: int, col: int) -> float:
    """3x3 box blur at one cell, out-of-grid taps contribute zero."""
    n, m = values.shape
    total = 0.0
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            r, c = row + dr, col + dc
            if 0 <= r < n and 0 <= c < m:
                total += float(values[r, c])
    return total / 9.0


def greedy_climb(values: np.ndarray, start: tuple[int, int],
                 budget: int) -> list[tuple[int, int]]:
    """Hill climb on a working copy: best neighbor by value, then by blurred
    value, then by lowest (row, col); the departed cell is zeroed."""
    work = values.astype(float).copy()
    n, m = work.shape
    path = [start]
    cur = start
    for _ in range(budget):
        best = None
        for r in range(cur[0] - 1, cur[0] + 2):
            for c in range(cur[1] - 1, cur[1] + 2):
                if (r, c) == cur or not (0 <= r < n and 0 <= c < m):
                    continue
                key = (float(work[r, c]), conv3x3_zero_padded(work, r, c))
                if best is None or key[0] > best[0] or (
                        key[0] == best[0] and key[1] > best[1]):
                    best = (key[0], key[1], (r, c))
        work[cur] = 0.0
        cur = best[2]
        path.append(cur)
    return path


def distinct_cell_score(path, values: np.ndarray) -> float:
    """Sum of original values over the sorted set of visited cells."""
    total = 0.0
    for r, c in sorted(set(path)):
        total += float(values[r, c])
    return total


def warmed_copies(values: np.ndarray, steps: int) -> list[np.ndarray]:
    """The unwarmed grid plus the grid after each cumulative decrement of
    (original max / steps), clamped at zero."""
    out = [values.astype(float).copy()]
    dec = float(values.max()) / steps
    work = values.astype(float).copy()
    for _ in range(steps):
        nxt = np.empty_like(work)
        n, m = work.shape
        for r in range(n):
            for c in range(m):
                v = float(work[r, c])
                nxt[r, c] = v - dec if v > dec else 0.0
        work = nxt
        out.append(work.copy())
    return out


def best_warmed_path(values: np.ndarray, start: tuple[int, int],
                     budget: int, steps: int):
    """(cells, score, warming step) of the best candidate, earliest wins."""
    best = None
    for k, grid in enumerate(warmed_copies(values, steps)):
        path = greedy_climb(grid, start, budget)
        score = distinct_cell_score(path, values)
        if best is None or score > best[1]:
            best = (path, score, k)
    return best


def min_pairwise_separation(trajectories) -> float:
    """Smallest planar distance between any two rovers at any shared stamp.

    Positions are expanded onto one global sample clock; a trajectory holds
    its first pose before it starts and its last pose after it ends.
    """
    rate = trajectories[0].rate_hz
    first = [int(round(t.times[0] * rate)) for t in trajectories]
    last = [f + t.samples.shape[0] - 1 for f, t in zip(first, trajectories)]
    k0, k1 = min(first), max(last)
    n_steps = k1 - k0 + 1
    tracks = np.empty((len(trajectories), n_steps, 2))
    for i, traj in enumerate(trajectories):
        idx = np.arange(k0, k1 + 1) - first[i]
        idx = np.minimum(np.maximum(idx, 0), traj.samples.shape[0] - 1)
        tracks[i] = traj.xy[idx]
    worst = math.inf
    for i in range(len(trajectories)):
        for j in range(i + 1, len(trajectories)):
            d = np.hypot(tracks[i, :, 0] - tracks[j, :, 0],
                         tracks[i, :, 1] - tracks[j, :, 1])
            worst = min(worst, float(d.min()))
    return worst


def plane_attitude(gx: float, gy: float, heading_deg: float):
    """(pitch, roll) in degrees on the plane z = gx*x + gy*y for a heading."""
    h = math.radians(heading_deg)
    pitch = math.degrees(math.atan(gx * math.cos(h) + gy * math.sin(h)))
    roll = math.degrees(math.atan(gx * math.sin(h) - gy * math.cos(h)))
    return pitch, roll


def gauss2_density(x, y, mu, sigma) -> float:
    """Direct bivariate normal density from the inverse covariance."""
    a, b = sigma[0]
    b2, c = sigma[1]
    det = a * c - b * b2
    dx, dy = x - mu[0], y - mu[1]
    quad = (c * dx * dx - (b + b2) * dx * dy + a * dy * dy) / det
    return math.exp(-0.5 * quad) / math.sqrt(4.0 * math.pi ** 2 * det)
