"""Segment path planning with RRT* under a terrain-aware edge cost.

Each tree edge is scored by four normalized terms: edge length, roll and
pitch of the terrain under the child node (evaluated with the edge heading),
and the heading change relative to the parent's arrival heading. Sampling is
restricted to an axis-aligned region around the start and goal. Nodes landing
on impassable cells, or whose attitude meets the impassable slope threshold,
are rejected; high-risk terrain stays admissible and is discouraged by the
attitude cost terms only.

Because the turn term makes edge costs heading-dependent, a rewire that
improves one node can raise the total of a goal-reaching descendant. The
planner therefore keeps the best complete path seen at any point during the
build and returns that, which also makes the returned cost non-increasing in
the node budget for a fixed seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .terrain import DemGrid, TerrainClass, TraversabilityMap


class NoPathFound(RuntimeError):
    """Raised when the node budget is exhausted without reaching the goal."""

    def __init__(self, start, goal, nodes: int):
        super().__init__(f"no path from {start} to {goal} after {nodes} nodes")
        self.start = tuple(start)
        self.goal = tuple(goal)
        self.nodes = nodes


@dataclass(frozen=True)
class CostWeights:
    """Weights and normalizers of the 4-term edge cost.

    ``max_step_m`` doubles as the distance normalizer and the steering cap.
    """

    w_dist: float = 0.1
    w_roll: float = 0.4
    w_pitch: float = 0.4
    w_turn: float = 0.1
    max_step_m: float = 1.0
    roll_norm_deg: float = 15.0
    pitch_norm_deg: float = 15.0
    turn_norm_deg: float = 60.0

    def __post_init__(self):
        ws = (self.w_dist, self.w_roll, self.w_pitch, self.w_turn)
        if any(w < 0 for w in ws):
            raise ValueError(f"weights must be non-negative, got {ws}")
        if abs(sum(ws) - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1, got {sum(ws)}")
        if min(self.max_step_m, self.roll_norm_deg, self.pitch_norm_deg,
               self.turn_norm_deg) <= 0:
            raise ValueError("normalizers must be positive")


class EdgeMetrics(NamedTuple):
    """Raw components of one tree edge, as fed to :func:`node_cost`."""

    dist_m: float
    roll_deg: float
    pitch_deg: float
    turn_deg: float


def node_cost(edge: EdgeMetrics, weights: CostWeights = CostWeights()) -> float:
    """Weighted, normalized cost of one edge."""
    return (weights.w_dist * edge.dist_m / weights.max_step_m
            + weights.w_roll * abs(edge.roll_deg) / weights.roll_norm_deg
            + weights.w_pitch * abs(edge.pitch_deg) / weights.pitch_norm_deg
            + weights.w_turn * abs(edge.turn_deg) / weights.turn_norm_deg)


@dataclass(frozen=True)
class PlanRegion:
    """Axis-aligned sampling window; always contains start and goal."""

    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def __post_init__(self):
        if not (self.xmin < self.xmax and self.ymin < self.ymax):
            raise ValueError(f"degenerate region {self}")

    @classmethod
    def around(cls, start, goal, map_bounds, clearance_m: float = 2.0) -> "PlanRegion":
        """Bounding box of start and goal inflated by the clearance, clipped to the map."""
        bx0, by0, bx1, by1 = map_bounds
        x0 = max(min(start[0], goal[0]) - clearance_m, bx0)
        y0 = max(min(start[1], goal[1]) - clearance_m, by0)
        x1 = min(max(start[0], goal[0]) + clearance_m, bx1)
        y1 = min(max(start[1], goal[1]) + clearance_m, by1)
        return cls(x0, y0, x1, y1)

    def contains(self, x: float, y: float) -> bool:
        return self.xmin <= x <= self.xmax and self.ymin <= y <= self.ymax


@dataclass(frozen=True)
class PlannerSettings:
    max_nodes: int = 1250
    goal_tolerance_m: float = 0.5
    goal_bias: float = 0.05
    rewire_gamma: float = 10.0
    clearance_m: float = 2.0
    # headroom below the impassable angle when accepting nodes, so a rover
    # tracking the path imperfectly still stays under the hard limit
    attitude_margin_deg: float = 0.0

    def __post_init__(self):
        if self.max_nodes < 2:
            raise ValueError(f"max_nodes must be >= 2, got {self.max_nodes}")
        if not 0.0 <= self.goal_bias < 1.0:
            raise ValueError(f"goal_bias must be in [0, 1), got {self.goal_bias}")
        if min(self.goal_tolerance_m, self.rewire_gamma, self.clearance_m) <= 0:
            raise ValueError("tolerance, gamma and clearance must be positive")
        if self.attitude_margin_deg < 0:
            raise ValueError("attitude_margin_deg must be non-negative")


@dataclass(frozen=True)
class PlannedPath:
    """Waypoints (x, y, z) from start to goal with cumulative edge costs."""

    waypoints: np.ndarray
    cum_costs: np.ndarray
    cost: float
    nodes_used: int

    def __post_init__(self):
        wp = np.asarray(self.waypoints, dtype=float)
        cc = np.asarray(self.cum_costs, dtype=float)
        if wp.ndim != 2 or wp.shape[1] != 3 or wp.shape[0] < 1:
            raise ValueError(f"waypoints must be (n, 3), got {wp.shape}")
        if cc.shape != (wp.shape[0],):
            raise ValueError("one cumulative cost per waypoint required")
        if np.any(np.diff(cc) < -1e-9):
            raise ValueError("cumulative costs must be non-decreasing")
        if abs(float(cc[-1]) - self.cost) > 1e-9:
            raise ValueError("cost must equal the final cumulative cost")
        wp.flags.writeable = False
        cc.flags.writeable = False
        object.__setattr__(self, "waypoints", wp)
        object.__setattr__(self, "cum_costs", cc)

    @property
    def length_m(self) -> float:
        return float(np.sum(np.hypot(np.diff(self.waypoints[:, 0]),
                                     np.diff(self.waypoints[:, 1]))))


def _wrap_deg(angle: float) -> float:
    """Wrap to [-180, 180)."""
    return (angle + 180.0) % 360.0 - 180.0


def _attitude_deg(gx: float, gy: float, heading_rad: float) -> tuple[float, float]:
    # same bilinear-gradient projection as terrain.surface_query
    ch, sh = math.cos(heading_rad), math.sin(heading_rad)
    pitch = math.degrees(math.atan(gx * ch + gy * sh))
    roll = math.degrees(math.atan(gx * sh - gy * ch))
    return pitch, roll


def plan_segment(start, goal, dem: DemGrid, trav: TraversabilityMap,
                 weights: CostWeights = CostWeights(),
                 settings: PlannerSettings = PlannerSettings(),
                 seed=0, region: PlanRegion | None = None) -> PlannedPath:
    """Plan from start to goal, deterministic per seed.

    Grows the tree until ``settings.max_nodes`` and returns the cheapest
    complete path observed, with the exact goal point appended when the final
    approach passes the attitude check. Raises NoPathFound if the goal
    tolerance is never reached.
    """
    sx0, sy0 = float(start[0]), float(start[1])
    gx0, gy0 = float(goal[0]), float(goal[1])
    limit = trav.thresholds.impassable_deg - settings.attitude_margin_deg
    if trav.class_at(sx0, sy0) == TerrainClass.IMPASSABLE:
        raise ValueError(f"start {(sx0, sy0)} lies on impassable terrain")
    if trav.class_at(gx0, gy0) == TerrainClass.IMPASSABLE:
        raise ValueError(f"goal {(gx0, gy0)} lies on impassable terrain")
    if region is None:
        region = PlanRegion.around((sx0, sy0), (gx0, gy0), dem.bounds,
                                   settings.clearance_m)
    if not (region.contains(sx0, sy0) and region.contains(gx0, gy0)):
        raise ValueError("region must contain start and goal")

    rng = np.random.default_rng(seed)
    cap = settings.max_nodes
    max_step = weights.max_step_m
    tol = settings.goal_tolerance_m
    goal_grad = dem.gradient_at(gx0, gy0)

    pos = np.empty((cap, 2))
    grad = np.empty((cap, 2))
    parent = np.full(cap, -1, dtype=np.int64)
    heading = np.zeros(cap)          # arrival heading deg; root entry unused
    comp = np.zeros((cap, 4))        # dist, roll, pitch, turn per edge
    ncost = np.zeros(cap)
    cum = np.zeros(cap)
    reaches = np.zeros(cap, dtype=bool)
    children: list[list[int]] = [[] for _ in range(cap)]

    pos[0] = (sx0, sy0)
    grad[0] = dem.gradient_at(sx0, sy0)
    count = 1

    best_total = math.inf
    best_pts: list[tuple[float, float]] | None = None
    best_costs: list[float] | None = None
    best_hop: EdgeMetrics | None = None

    def edge_metrics(p: int, cx: float, cy: float, cgx: float, cgy: float):
        """Metrics of the edge p -> (cx, cy); None when the attitude is out of limits."""
        dx, dy = cx - pos[p, 0], cy - pos[p, 1]
        dist = math.hypot(dx, dy)
        if dist < 1e-12 or dist > max_step + 1e-9:
            return None, 0.0
        hdg = math.atan2(dy, dx)
        pitch, roll = _attitude_deg(cgx, cgy, hdg)
        if abs(pitch) >= limit or abs(roll) >= limit:
            return None, 0.0
        turn = 0.0 if p == 0 else abs(_wrap_deg(math.degrees(hdg) - heading[p]))
        return EdgeMetrics(dist, roll, pitch, turn), math.degrees(hdg)

    def goal_total(g: int):
        """Total cost of completing at node g, appending the goal when valid."""
        if math.hypot(pos[g, 0] - gx0, pos[g, 1] - gy0) < 1e-12:
            return float(cum[g]), None
        hop, _ = edge_metrics(g, gx0, gy0, goal_grad[0], goal_grad[1])
        if hop is None:
            return float(cum[g]), None
        return float(cum[g] + node_cost(hop, weights)), hop

    def consider(g: int):
        # snapshot the chain immediately: later rewires may re-link its nodes
        nonlocal best_total, best_pts, best_costs, best_hop
        total, hop = goal_total(g)
        if total < best_total:
            chain = []
            i = g
            while i >= 0:
                chain.append(i)
                i = int(parent[i])
            chain.reverse()
            pts = [(float(pos[i, 0]), float(pos[i, 1])) for i in chain]
            costs = [0.0]
            for i in chain[1:]:
                costs.append(costs[-1] + float(ncost[i]))
            best_total, best_pts, best_costs, best_hop = total, pts, costs, hop

    if math.hypot(sx0 - gx0, sy0 - gy0) <= tol:
        reaches[0] = True
        consider(0)

    while count < cap:
        if rng.random() < settings.goal_bias:
            samp_x, samp_y = gx0, gy0
        else:
            samp_x = rng.uniform(region.xmin, region.xmax)
            samp_y = rng.uniform(region.ymin, region.ymax)

        dx = pos[:count, 0] - samp_x
        dy = pos[:count, 1] - samp_y
        d2 = dx * dx + dy * dy
        ni = int(np.argmin(d2))
        d = math.sqrt(float(d2[ni]))
        if d < 1e-12:
            continue
        f = min(1.0, max_step / d)
        nx = float(pos[ni, 0] + (samp_x - pos[ni, 0]) * f)
        ny = float(pos[ni, 1] + (samp_y - pos[ni, 1]) * f)

        if trav.class_at(nx, ny) == TerrainClass.IMPASSABLE:
            continue
        ngx, ngy = dem.gradient_at(nx, ny)

        radius = min(max_step, settings.rewire_gamma
                     * math.sqrt(math.log(count) / count)) if count >= 2 else 0.0
        ex = pos[:count, 0] - nx
        ey = pos[:count, 1] - ny
        e2 = ex * ex + ey * ey
        neigh = np.nonzero(e2 <= radius * radius)[0]
        cand = neigh if ni in neigh else np.append(neigh, ni)

        best_parent = -1
        best_cum = math.inf
        best_edge = None
        best_hdg = 0.0
        for p in cand:
            p = int(p)
            edge, hdg = edge_metrics(p, nx, ny, ngx, ngy)
            if edge is None:
                continue
            cc = float(cum[p] + node_cost(edge, weights))
            if cc < best_cum:
                best_parent, best_cum, best_edge, best_hdg = p, cc, edge, hdg
        if best_parent < 0:
            continue

        idx = count
        pos[idx] = (nx, ny)
        grad[idx] = (ngx, ngy)
        parent[idx] = best_parent
        heading[idx] = best_hdg
        comp[idx] = best_edge
        ncost[idx] = node_cost(best_edge, weights)
        cum[idx] = best_cum
        children[best_parent].append(idx)
        count += 1

        if math.hypot(nx - gx0, ny - gy0) <= tol:
            reaches[idx] = True
            consider(idx)

        # rewire neighbors through the new node
        for q in neigh:
            q = int(q)
            if q == 0 or q == best_parent:
                continue
            edge, hdg = edge_metrics(idx, float(pos[q, 0]), float(pos[q, 1]),
                                     float(grad[q, 0]), float(grad[q, 1]))
            if edge is None:
                continue
            cc = float(cum[idx] + node_cost(edge, weights))
            if cc >= cum[q]:
                continue
            children[int(parent[q])].remove(q)
            parent[q] = idx
            heading[q] = hdg
            comp[q] = edge
            ncost[q] = node_cost(edge, weights)
            cum[q] = cc
            children[idx].append(q)
            # propagate: direct children get a new turn term, deeper nodes
            # only a shifted cumulative cost
            stack = [q]
            while stack:
                a = stack.pop()
                for ch in children[a]:
                    if a == q:
                        turn = abs(_wrap_deg(heading[ch] - heading[q]))
                        comp[ch, 3] = turn
                        ncost[ch] = node_cost(EdgeMetrics(*comp[ch]), weights)
                    cum[ch] = cum[a] + ncost[ch]
                    if reaches[ch]:
                        consider(ch)
                    stack.append(ch)
            if reaches[q]:
                consider(q)

    if best_pts is None:
        raise NoPathFound((sx0, sy0), (gx0, gy0), count)

    pts = best_pts
    costs = best_costs
    if best_hop is not None:
        pts.append((gx0, gy0))
        costs.append(costs[-1] + node_cost(best_hop, weights))

    # tolerate oversized goal tolerances: split any hop longer than one step
    out_pts: list[tuple[float, float]] = [pts[0]]
    out_costs: list[float] = [costs[0]]
    for (x0, y0), (x1, y1), c0, c1 in zip(pts, pts[1:], costs, costs[1:]):
        splits = max(1, math.ceil(math.hypot(x1 - x0, y1 - y0) / max_step - 1e-9))
        for k in range(1, splits + 1):
            t = k / splits
            out_pts.append((x0 + (x1 - x0) * t, y0 + (y1 - y0) * t))
            out_costs.append(c0 + (c1 - c0) * t)

    waypoints = np.array([(x, y, dem.height_at(x, y)) for x, y in out_pts])
    return PlannedPath(waypoints=waypoints, cum_costs=np.asarray(out_costs),
                       cost=float(out_costs[-1]), nodes_used=count)


def path_attitude_profile(path: PlannedPath, dem: DemGrid) -> np.ndarray:
    """Per-waypoint (pitch_deg, roll_deg) using each segment's arrival heading.

    The first waypoint uses the departure heading of the first segment; a
    single-point path uses heading 0.
    """
    from .terrain import surface_query

    wp = path.waypoints
    n = wp.shape[0]
    out = np.zeros((n, 2))
    for i in range(n):
        if n == 1:
            hdg = 0.0
        elif i == 0:
            hdg = math.degrees(math.atan2(wp[1, 1] - wp[0, 1], wp[1, 0] - wp[0, 0]))
        else:
            hdg = math.degrees(math.atan2(wp[i, 1] - wp[i - 1, 1],
                                          wp[i, 0] - wp[i - 1, 0]))
        q = surface_query(dem, float(wp[i, 0]), float(wp[i, 1]), hdg)
        out[i] = (q.pitch_deg, q.roll_deg)
    return out


def save_path_csv(path: PlannedPath, file) -> None:
    """Write waypoints as CSV (index, x_m, y_m, z_m, cum_cost)."""
    with open(file, "w", encoding="ascii") as fh:
        fh.write("index,x_m,y_m,z_m,cum_cost\n")
        for i in range(path.waypoints.shape[0]):
            x, y, z = (float(v) for v in path.waypoints[i])
            fh.write(f"{i},{x!r},{y!r},{z!r},{float(path.cum_costs[i])!r}\n")
