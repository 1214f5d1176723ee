"""Prioritized multi-rover planning over the mission's target segments.

For each segment (one pair of consecutive team targets) the rovers are
planned strictly in priority order. Rover 1 commits unconditionally; every
later rover is planned with a fresh seed, simulated, and checked against all
already-committed trajectories of that segment. A conflict sends it back to
planning with a new seed, up to a retry cap. Rovers never leapfrog: a commit
can never change a higher-priority trajectory.

Trajectories share one global 10 Hz clock. All rovers start a segment
simultaneously; within a segment, rovers that finish early hold their final
pose (a parked rover still occupies space) until the slowest rover is done,
and the next segment starts from that common instant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .rover import (ControllerState, RoverParams, RoverState, SimSettings,
                    Trajectory, initial_state, simulate_path)
from .rrt import (CostWeights, NoPathFound, PlannedPath, PlannerSettings,
                  plan_segment)
from .terrain import DemGrid, TerrainClass, TraversabilityMap

# fixed labels for deriving per-stage random streams from the master seed
SEED_TERRAIN = 1
SEED_PDM = 2
SEED_TARGETS = 3
SEED_RRT = 4
SEED_SLIP = 5


class ConflictReport(NamedTuple):
    """First detected separation violation between two trajectories."""

    time_s: float
    rover_a: int
    rover_b: int
    separation_m: float
    pos_a: tuple[float, float]
    pos_b: tuple[float, float]


@dataclass(frozen=True)
class TeamSetup:
    """Everything fixed for a whole mission's coordination run."""

    dem: DemGrid
    trav: TraversabilityMap
    weights: CostWeights = CostWeights()
    planner: PlannerSettings = PlannerSettings()
    rover: RoverParams = RoverParams()
    controller: ControllerState = field(default_factory=ControllerState)
    sim: SimSettings = SimSettings()
    d_safe_m: float = 1.0
    max_retries: int = 20
    spacing_m: float = 1.0
    retry_hold_s: float = 1.0
    master_seed: int = 0

    def __post_init__(self):
        if self.d_safe_m <= 0 or self.spacing_m <= 0:
            raise ValueError("d_safe and spacing must be positive")
        if self.max_retries < 0 or self.retry_hold_s < 0:
            raise ValueError("max_retries and retry_hold must be non-negative")


@dataclass
class CoordinationState:
    """Mutable bookkeeping of the priority loop (exposed for diagnostics)."""

    segment_index: int = 0
    rover_index: int = 0
    committed: list[Trajectory] = field(default_factory=list)
    retries: int = 0


@dataclass(frozen=True)
class TeamPlan:
    """Per-segment artifacts plus the stitched full-mission trajectories."""

    trajectories: tuple[Trajectory, ...]
    segment_trajectories: tuple[tuple[Trajectory, ...], ...]
    segment_paths: tuple[tuple[PlannedPath, ...], ...]
    retries_per_segment: tuple[int, ...]
    d_safe_m: float

    @property
    def n_rovers(self) -> int:
        return len(self.trajectories)

    @property
    def n_segments(self) -> int:
        return len(self.segment_trajectories)

    @property
    def total_time_s(self) -> float:
        return max(t.duration_s for t in self.trajectories)

    @property
    def distances_m(self) -> tuple[float, ...]:
        return tuple(t.distance_m for t in self.trajectories)

    def min_separation_m(self) -> float:
        """Smallest planar pairwise distance over all shared time stamps."""
        if self.n_rovers < 2:
            return math.inf
        best = math.inf
        for a in range(self.n_rovers):
            for b in range(a + 1, self.n_rovers):
                xa = self.trajectories[a].xy
                xb = self.trajectories[b].xy
                n = min(xa.shape[0], xb.shape[0])
                d = np.hypot(xa[:n, 0] - xb[:n, 0], xa[:n, 1] - xb[:n, 1])
                best = min(best, float(d.min()))
        return best


class SegmentFailure(RuntimeError):
    """A segment could not be coordinated; carries what was planned so far."""

    def __init__(self, message: str, segment_index: int, rover_id: int,
                 conflict: ConflictReport | None = None,
                 partial_plan: TeamPlan | None = None):
        super().__init__(message)
        self.segment_index = segment_index
        self.rover_id = rover_id
        self.conflict = conflict
        self.partial_plan = partial_plan


def assign_rover_goals(seg_start, seg_goal, n_rovers: int,
                       spacing_m: float = 1.0, bounds=None,
                       margin_m: float = 0.0,
                       align_with=None) -> list[tuple[float, float]]:
    """Per-rover goals fanned out perpendicular to the segment direction.

    Rover k of n sits (k - (n+1)/2) * spacing to the left of the team goal,
    so five rovers at 1 m spacing tile a 5 m swath (offsets -2..+2 m). A
    zero-length segment falls back to the same fan along +y. Goals are
    clamped into ``bounds`` (xmin, ymin, xmax, ymax) shrunk by ``margin_m``.

    ``align_with`` is the perpendicular used for the previous segment; when
    given, the fan flips sign as needed to stay on the same side, so rovers
    keep their lanes across sharp turns instead of crossing each other.
    """
    if n_rovers < 1:
        raise ValueError(f"need at least one rover, got {n_rovers}")
    px, py = fan_perpendicular(seg_start, seg_goal, align_with)
    if math.hypot(seg_goal[0] - seg_start[0],
                  seg_goal[1] - seg_start[1]) < 1e-9:
        spacing_m = 0.5
    goals = []
    mid = (n_rovers + 1) / 2.0
    for k in range(1, n_rovers + 1):
        off = (k - mid) * spacing_m
        gx = seg_goal[0] + off * px
        gy = seg_goal[1] + off * py
        if bounds is not None:
            gx = min(max(gx, bounds[0] + margin_m), bounds[2] - margin_m)
            gy = min(max(gy, bounds[1] + margin_m), bounds[3] - margin_m)
        goals.append((gx, gy))
    return goals


def fan_perpendicular(seg_start, seg_goal, align_with=None) -> tuple[float, float]:
    """Unit vector the goal fan spreads along (left of travel by default)."""
    dx = seg_goal[0] - seg_start[0]
    dy = seg_goal[1] - seg_start[1]
    norm = math.hypot(dx, dy)
    if norm < 1e-9:
        px, py = 0.0, 1.0
    else:
        px, py = -dy / norm, dx / norm
    if align_with is not None and px * align_with[0] + py * align_with[1] < 0:
        px, py = -px, -py
    return px, py


def nudge_passable(trav: TraversabilityMap, dem: DemGrid, point,
                   max_radius_m: float = 3.0, step_m: float = 0.5,
                   keep_away=(), min_dist_m: float = 0.0) -> tuple[float, float]:
    """Closest ring-scan point off impassable terrain, deterministic.

    Returns the point itself when it qualifies; otherwise scans rings of
    increasing radius (8 headings each, counterclockwise from east) and
    returns the first in-bounds passable candidate. ``keep_away`` points
    (with ``min_dist_m``) are honored when possible and dropped if no
    candidate satisfies them, so terrain validity always wins.
    """
    from .terrain import TerrainClass

    x, y = float(point[0]), float(point[1])
    bx0, by0, bx1, by1 = dem.bounds

    def ok(cx, cy, spacing) -> bool:
        if not (bx0 <= cx <= bx1 and by0 <= cy <= by1):
            return False
        if trav.class_at(cx, cy) == TerrainClass.IMPASSABLE:
            return False
        return not spacing or all(math.hypot(cx - px, cy - py) >= min_dist_m
                                  for px, py in keep_away)

    n_rings = int(round(max_radius_m / step_m))
    for spacing in (True, False) if keep_away and min_dist_m > 0 else (False,):
        if ok(x, y, spacing):
            return x, y
        for i in range(1, n_rings + 1):
            r = i * step_m
            for k in range(8):
                ang = math.pi * k / 4.0
                cx = x + r * math.cos(ang)
                cy = y + r * math.sin(ang)
                if ok(cx, cy, spacing):
                    return cx, cy
    raise ValueError(f"no passable terrain within {max_radius_m} m of {point}")


def check_conflict(traj_a: Trajectory, traj_b: Trajectory,
                   d_safe_m: float) -> ConflictReport | None:
    """First time stamp where planar separation drops below d_safe.

    Both trajectories must share the sample rate and global clock. A
    trajectory that ends early persists at its final pose; one that starts
    late is anchored at its first pose.
    """
    if abs(traj_a.rate_hz - traj_b.rate_hz) > 1e-9:
        raise ValueError("trajectories must share one sample rate")
    rate = traj_a.rate_hz
    ia0 = round(traj_a.times[0] * rate)
    ib0 = round(traj_b.times[0] * rate)
    na = traj_a.samples.shape[0]
    nb = traj_b.samples.shape[0]
    k0 = max(ia0, ib0)
    k1 = max(ia0 + na - 1, ib0 + nb - 1)
    k = np.arange(k0, k1 + 1)
    ia = np.clip(k - ia0, 0, na - 1)
    ib = np.clip(k - ib0, 0, nb - 1)
    xa = traj_a.xy[ia]
    xb = traj_b.xy[ib]
    sep = np.hypot(xa[:, 0] - xb[:, 0], xa[:, 1] - xb[:, 1])
    bad = np.nonzero(sep < d_safe_m)[0]
    if bad.size == 0:
        return None
    i = int(bad[0])
    return ConflictReport(time_s=float(k[i] / rate), rover_a=traj_a.rover_id,
                          rover_b=traj_b.rover_id, separation_m=float(sep[i]),
                          pos_a=(float(xa[i, 0]), float(xa[i, 1])),
                          pos_b=(float(xb[i, 0]), float(xb[i, 1])))


def _pad_to(traj: Trajectory, n_samples: int) -> Trajectory:
    """Extend a trajectory to n_samples by holding the final pose."""
    n = traj.samples.shape[0]
    if n >= n_samples:
        return traj
    start = round(traj.times[0] * traj.rate_hz)
    tail = np.repeat(traj.samples[-1:], n_samples - n, axis=0)
    tail[:, 0] = (start + np.arange(n, n_samples)) / traj.rate_hz
    tail[:, 7] = 0.0
    return Trajectory(samples=np.vstack([traj.samples, tail]),
                      rover_id=traj.rover_id, priority=traj.priority,
                      rate_hz=traj.rate_hz, timed_out=traj.timed_out)


class _KeepOutMap:
    """Traversability view that masks discs around other rovers' poses.

    Planner-only: the mask steers sampling away from spots another rover is
    known to occupy (parked at its segment start, or parked at a committed
    goal) so separation is designed in rather than discovered in simulation.
    """

    def __init__(self, base: TraversabilityMap, discs) -> None:
        self.base = base
        self.thresholds = base.thresholds
        self.discs = [(float(x), float(y), float(r)) for x, y, r in discs
                      if r > 0.0]

    def class_at(self, x: float, y: float) -> TerrainClass:
        for cx, cy, r in self.discs:
            if (x - cx) ** 2 + (y - cy) ** 2 < r * r:
                return TerrainClass.IMPASSABLE
        return self.base.class_at(x, y)


def _shrunk_discs(centers, radius: float, *endpoints):
    """Keep-out discs shrunk so no given endpoint lies inside one."""
    discs = []
    for cx, cy in centers:
        r = radius
        for px, py in endpoints:
            r = min(r, math.hypot(px - cx, py - cy) - 0.05)
        discs.append((cx, cy, r))
    return discs


def _plan_with_inflation(setup: TeamSetup, start, goal, seed,
                         trav=None) -> PlannedPath:
    """plan_segment with clearance-doubling and mask-dropping retries."""
    attempts = [(trav, setup.planner)] if trav is not None else []
    attempts.append((setup.trav, setup.planner))
    wider = replace(setup.planner, clearance_m=2 * setup.planner.clearance_m)
    if trav is not None:
        attempts.insert(1, (trav, wider))
    attempts.append((setup.trav, wider))
    for view, planner in attempts[:-1]:
        try:
            return plan_segment(start, goal, setup.dem, view, setup.weights,
                                planner, seed)
        except NoPathFound:
            continue
    view, planner = attempts[-1]
    return plan_segment(start, goal, setup.dem, view, setup.weights,
                        planner, seed)


def coordinate_segment(setup: TeamSetup, seg_index: int,
                       starts: list[RoverState], goals, start_index: int,
                       state: CoordinationState | None = None,
                       ) -> tuple[list[Trajectory], list[PlannedPath], int]:
    """Plan, simulate and de-conflict all rovers for one segment.

    Returns (trajectories padded to a common length, paths, replan count).
    Raises SegmentFailure when a rover exhausts its retries, and NoPathFound
    when planning fails even after region inflation.
    """
    if state is None:
        state = CoordinationState()
    state.segment_index = seg_index
    state.committed = []
    paths: list[PlannedPath] = []
    retries = 0
    # keep nudged goals far enough apart that two parked rovers (each up to
    # accept_radius short of its goal) can never close below d_safe, but
    # never demand more room than the configured lane spacing provides
    goal_gap = min(setup.spacing_m,
                   setup.d_safe_m + 2.0 * setup.controller.accept_radius_m)
    keep_out_r = setup.d_safe_m + 0.35
    fixed_goals: list[tuple[float, float]] = []
    # plan from the nearest passable point; slip can park a rover on
    # the edge of a bad cell even though paths avoid them
    start_xys = [nudge_passable(setup.trav, setup.dem, (s.x_m, s.y_m))
                 for s in starts]

    for m in range(len(starts)):
        state.rover_index = m + 1
        start_xy = start_xys[m]
        goal_xy = nudge_passable(setup.trav, setup.dem, goals[m],
                                 keep_away=fixed_goals, min_dist_m=goal_gap)
        fixed_goals.append(goal_xy)
        # other rovers sit at their segment starts until they depart, and
        # committed rovers park at their goals afterwards; route around both
        posts = [p for i, p in enumerate(start_xys) if i != m]
        posts += [(float(t.xy[-1, 0]), float(t.xy[-1, 1]))
                  for t in state.committed]
        view = _KeepOutMap(setup.trav,
                           _shrunk_discs(posts, keep_out_r, start_xy, goal_xy))
        attempt = 0
        while True:
            plan_seed = np.random.SeedSequence(
                (setup.master_seed, SEED_RRT, seg_index, m, attempt))
            slip_seed = np.random.SeedSequence(
                (setup.master_seed, SEED_SLIP, seg_index, m, attempt))
            path = _plan_with_inflation(setup, start_xy, goal_xy, plan_seed,
                                        trav=view)
            # retries also delay departure, resolving timing-locked crossings
            hold = 0 if m == 0 else round(attempt * setup.retry_hold_s
                                          * setup.sim.log_rate_hz)
            traj = simulate_path(starts[m], path, setup.rover,
                                 setup.controller, setup.dem, setup.sim,
                                 seed=slip_seed, start_index=start_index,
                                 rover_id=m + 1, priority=m + 1,
                                 hold_samples=hold)
            conflict = None
            if not traj.timed_out:
                if m == 0:
                    break
                for other in state.committed:
                    conflict = check_conflict(traj, other, setup.d_safe_m)
                    if conflict is not None:
                        break
                if conflict is None:
                    break
            attempt += 1
            retries += 1
            state.retries = retries
            if attempt > setup.max_retries:
                why = "timed out" if traj.timed_out else \
                    f"conflicts with rover {conflict.rover_b} at t={conflict.time_s}s"
                raise SegmentFailure(
                    f"segment {seg_index}: rover {m + 1} {why} after "
                    f"{setup.max_retries} retries", seg_index, m + 1, conflict)
        state.committed.append(traj)
        paths.append(path)

    longest = max(t.samples.shape[0] for t in state.committed)
    padded = [_pad_to(t, longest) for t in state.committed]
    return padded, paths, retries


def coordinate_mission(setup: TeamSetup, start_xy, targets,
                       n_rovers: int = 5) -> TeamPlan:
    """Run the priority loop over every segment from start through all targets.

    Rovers deploy line-abreast around ``start_xy``, perpendicular to the
    first segment. Each segment starts where (and when) the previous one
    ended for every rover. On failure the partial plan rides along on the
    raised SegmentFailure.
    """
    targets = [tuple(map(float, t)) for t in targets]
    if not targets:
        raise ValueError("need at least one target")
    bounds = setup.dem.bounds

    first_goal = targets[0]
    perp0 = fan_perpendicular(start_xy, first_goal)
    # fan around the start: reverse the leg so the fan centers on start_xy,
    # then re-align the lane signs with the outbound direction
    deploy = assign_rover_goals(first_goal, start_xy, n_rovers,
                                setup.spacing_m, bounds,
                                margin_m=setup.rover.footprint_radius_m,
                                align_with=perp0)
    deploy_gap = min(setup.spacing_m,
                     setup.d_safe_m + 2.0 * setup.controller.accept_radius_m)
    fixed: list[tuple[float, float]] = []
    for p in deploy:
        fixed.append(nudge_passable(setup.trav, setup.dem, p,
                                    keep_away=fixed, min_dist_m=deploy_gap))
    deploy = fixed
    yaw0 = math.degrees(math.atan2(first_goal[1] - start_xy[1],
                                   first_goal[0] - start_xy[0]))
    states = [initial_state(setup.dem, x, y, yaw0) for x, y in deploy]

    seg_trajs: list[tuple[Trajectory, ...]] = []
    seg_paths: list[tuple[PlannedPath, ...]] = []
    seg_retries: list[int] = []
    start_index = 0
    team_prev = tuple(start_xy)
    prev_perp = perp0
    coord_state = CoordinationState()

    for n, team_goal in enumerate(targets, start=1):
        goals = assign_rover_goals(team_prev, team_goal, n_rovers,
                                   setup.spacing_m, bounds,
                                   margin_m=setup.rover.footprint_radius_m,
                                   align_with=prev_perp)
        prev_perp = fan_perpendicular(team_prev, team_goal, align_with=prev_perp)
        try:
            padded, paths, retries = coordinate_segment(
                setup, n, states, goals, start_index, coord_state)
        except (SegmentFailure, NoPathFound) as err:
            partial = _stitch(seg_trajs, seg_paths, seg_retries, setup.d_safe_m)
            if isinstance(err, SegmentFailure):
                err.partial_plan = partial
                raise
            raise SegmentFailure(
                f"segment {n}: no path for a rover ({err})", n,
                coord_state.rover_index, partial_plan=partial) from err
        seg_trajs.append(tuple(padded))
        seg_paths.append(tuple(paths))
        seg_retries.append(retries)
        states = [t.final_state() for t in padded]
        start_index += padded[0].samples.shape[0] - 1
        team_prev = team_goal

    return _stitch(seg_trajs, seg_paths, seg_retries, setup.d_safe_m)


def _stitch(seg_trajs, seg_paths, seg_retries, d_safe_m: float) -> TeamPlan:
    """Concatenate per-segment trajectories onto the global clock."""
    if not seg_trajs:
        return TeamPlan(trajectories=(), segment_trajectories=(),
                        segment_paths=(), retries_per_segment=(),
                        d_safe_m=d_safe_m)
    n_rovers = len(seg_trajs[0])
    full = []
    for r in range(n_rovers):
        parts = [seg_trajs[0][r].samples]
        for seg in seg_trajs[1:]:
            parts.append(seg[r].samples[1:])
        t0 = seg_trajs[0][r]
        full.append(Trajectory(samples=np.vstack(parts), rover_id=t0.rover_id,
                               priority=t0.priority, rate_hz=t0.rate_hz))
    return TeamPlan(trajectories=tuple(full),
                    segment_trajectories=tuple(seg_trajs),
                    segment_paths=tuple(seg_paths),
                    retries_per_segment=tuple(seg_retries),
                    d_safe_m=d_safe_m)
