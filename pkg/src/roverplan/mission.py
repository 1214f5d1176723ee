"""End-to-end mission pipeline and the metrics reported from it.

Stages: terrain (load or synthesize) -> belief map -> target generation ->
prioritized team coordination -> metrics. Every stage draws its randomness
from the master seed through a fixed label, so a config reproduces a mission
byte for byte. Exports are written incrementally, so a failed stage leaves
the artifacts of completed stages behind for diagnosis.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .config import MissionConfig, config_to_dict
from .coordination import (SEED_PDM, SEED_TERRAIN, SegmentFailure, TeamPlan,
                           coordinate_mission)
from .pdm import Pdm, SearchGrid, random_pdm, rasterize, save_pdm
from .rover import Trajectory, save_trajectory_csv
from .rrt import NoPathFound
from .search import TargetList, lhc_gw_conv, save_targets_csv
from .terrain import (ClassFractions, DemGrid, TraversabilityMap, load_dem,
                      surface_attitude_many, synth_terrain, terrain_stats,
                      traversability)


class MissionError(RuntimeError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"stage {stage}: {message}")
        self.stage = stage


@dataclass(frozen=True)
class MissionReport:
    """Per-mission metrics, JSON-exportable."""

    seed: int
    n_rovers: int
    n_targets: int
    target_score: float
    terrain_pct: ClassFractions
    distances_m: tuple[float, ...]
    durations_s: tuple[float, ...]
    mean_distance_m: float
    mean_duration_s: float
    total_distance_m: float
    total_time_s: float
    exceedances: int
    samples: int
    compliance: float
    min_separation_m: float
    d_safe_m: float
    retries_per_segment: tuple[int, ...]
    curve_terminal_mass: float
    total_mass: float

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "n_rovers": self.n_rovers,
            "n_targets": self.n_targets,
            "target_score": self.target_score,
            "terrain_pct": {
                "traversable": self.terrain_pct.traversable_pct,
                "high_risk": self.terrain_pct.high_risk_pct,
                "impassable": self.terrain_pct.impassable_pct,
            },
            "distances_m": list(self.distances_m),
            "durations_s": list(self.durations_s),
            "mean_distance_m": self.mean_distance_m,
            "mean_duration_s": self.mean_duration_s,
            "total_distance_m": self.total_distance_m,
            "total_time_s": self.total_time_s,
            "exceedances": self.exceedances,
            "samples": self.samples,
            "compliance": self.compliance,
            "min_separation_m": self.min_separation_m,
            "d_safe_m": self.d_safe_m,
            "retries_per_segment": list(self.retries_per_segment),
            "curve_terminal_mass": self.curve_terminal_mass,
            "total_mass": self.total_mass,
        }


@dataclass(frozen=True)
class MissionResult:
    """Everything a mission produced, for reporting and plotting."""

    config: MissionConfig
    dem: DemGrid
    trav: TraversabilityMap
    pdm: Pdm
    grid: SearchGrid
    metric_grid: SearchGrid
    targets: TargetList
    plan: TeamPlan
    curve: np.ndarray
    report: MissionReport


def compliance_metric(trajectories, limit_deg: float = 15.0) -> tuple[int, float]:
    """(exceedance count, fraction of samples within attitude limits)."""
    total = 0
    bad = 0
    for traj in trajectories:
        s = traj.samples
        total += s.shape[0]
        bad += int(np.count_nonzero((np.abs(s[:, 4]) > limit_deg)
                                    | (np.abs(s[:, 5]) > limit_deg)))
    if total == 0:
        raise ValueError("no samples to score")
    return bad, 1.0 - bad / total


def accumulated_curve(trajectories, grid: SearchGrid,
                      search_radius_m: float) -> np.ndarray:
    """(mean per-rover distance, accumulated mass) after every time index.

    A metric cell counts from the first sample whose rover footprint
    (``search_radius_m``) covers its center; its probability mass is the cell
    value. Trajectories shorter than the longest persist at their final pose.
    """
    trajs = list(trajectories)
    if not trajs:
        raise ValueError("empty trajectory set")
    n = max(t.samples.shape[0] for t in trajs)
    cs = grid.cell_size
    ox, oy = grid.origin
    values = grid.values
    n_rows, n_cols = values.shape

    all_ids = []
    all_k = []
    mean_dist = np.zeros(n)
    # widest index box a probe square of half-width search_radius_m can span
    span = int(np.floor(2.0 * search_radius_m / cs)) + 1
    for traj in trajs:
        xy = traj.xy
        if xy.shape[0] < n:
            pad = np.repeat(xy[-1:], n - xy.shape[0], axis=0)
            xy = np.vstack([xy, pad])
        steps = np.hypot(np.diff(xy[:, 0]), np.diff(xy[:, 1]))
        mean_dist[1:] += np.cumsum(steps)
        k = np.arange(n)
        col_lo = np.floor((xy[:, 0] - search_radius_m - ox) / cs).astype(np.int64)
        row_lo = np.floor((xy[:, 1] - search_radius_m - oy) / cs).astype(np.int64)
        col_hi = np.floor((xy[:, 0] + search_radius_m - ox) / cs).astype(np.int64)
        row_hi = np.floor((xy[:, 1] + search_radius_m - oy) / cs).astype(np.int64)
        for dr in range(span + 1):
            row = row_lo + dr
            for dc in range(span + 1):
                col = col_lo + dc
                ok = ((row <= row_hi) & (col <= col_hi)
                      & (row >= 0) & (row < n_rows)
                      & (col >= 0) & (col < n_cols))
                cx = ox + (col + 0.5) * cs
                cy = oy + (row + 0.5) * cs
                ok &= np.hypot(cx - xy[:, 0], cy - xy[:, 1]) <= search_radius_m
                all_ids.append((row[ok] * n_cols + col[ok]))
                all_k.append(k[ok])
    mean_dist /= len(trajs)

    ids = np.concatenate(all_ids)
    ks = np.concatenate(all_k)
    mass = np.zeros(n)
    if ids.size:
        order = np.argsort(ks, kind="stable")
        ids, ks = ids[order], ks[order]
        uniq, first = np.unique(ids, return_index=True)
        cell_mass = values.ravel()[uniq]
        np.add.at(mass, ks[first], cell_mass)
    return np.column_stack([mean_dist, np.cumsum(mass)])


def _rewrap(stage: str, err: Exception) -> MissionError:
    return MissionError(stage, str(err))


def prepare_terrain(config: MissionConfig) -> tuple[DemGrid, TraversabilityMap]:
    """Stage 1: load or synthesize the DEM and classify it."""
    site = config.site
    try:
        if site.dem_file is not None:
            dem = load_dem(site.dem_file)
        else:
            seed = np.random.SeedSequence((config.seed, SEED_TERRAIN))
            dem = synth_terrain(seed,
                                width=int(round(site.width_m / site.cell_size_m)),
                                height=int(round(site.height_m / site.cell_size_m)),
                                cell_size=site.cell_size_m,
                                amplitude=site.amplitude_m,
                                smoothness=site.smoothness_m,
                                octaves=site.octaves)
        return dem, traversability(dem)
    except MissionError:
        raise
    except (OSError, ValueError) as err:
        raise _rewrap("terrain", err) from err


def prepare_pdm(config: MissionConfig, dem: DemGrid) -> tuple[Pdm, SearchGrid,
                                                              SearchGrid]:
    """Stage 2: sample the belief mixture, rasterize planning + metric grids."""
    m = config.pdm.margin_m
    x0, y0, x1, y1 = dem.bounds
    bounds = (x0 + m, y0 + m, x1 - m, y1 - m)
    if bounds[2] - bounds[0] <= 0 or bounds[3] - bounds[1] <= 0:
        raise MissionError("pdm", f"margin {m} m leaves no area on {dem.bounds}")
    try:
        seed = np.random.SeedSequence((config.seed, SEED_PDM))
        pdm = random_pdm(seed, config.pdm.components, bounds,
                         (config.pdm.eig_min_m2, config.pdm.eig_max_m2))
        grid = rasterize(pdm, bounds, config.pdm.cell_size_m)
        metric_grid = rasterize(pdm, bounds, config.metric_cell_m)
        return pdm, grid, metric_grid
    except ValueError as err:
        raise _rewrap("pdm", err) from err


def plan_targets(config: MissionConfig, grid: SearchGrid) -> TargetList:
    """Stage 3: hill-climbing target generation on the planning grid."""
    row = config.search.start_row
    col = config.search.start_col
    start = (grid.n_rows // 2 if row is None else row,
             grid.n_cols // 2 if col is None else col)
    try:
        return lhc_gw_conv(grid, start, config.search.budget,
                           config.search.warming_steps)
    except (IndexError, ValueError) as err:
        raise _rewrap("targets", err) from err


def run_mission(config: MissionConfig, out_dir=None) -> MissionResult:
    """Full pipeline; writes artifacts under out_dir when given."""
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        _dump_json(os.path.join(out_dir, "config.json"), config_to_dict(config))

    dem, trav = prepare_terrain(config)
    pdm, grid, metric_grid = prepare_pdm(config, dem)
    targets = plan_targets(config, grid)
    if out_dir is not None:
        save_pdm(pdm, os.path.join(out_dir, "pdm.json"))
        save_targets_csv(targets, os.path.join(out_dir, "targets.csv"))

    setup = config.team_setup(dem, trav)
    try:
        plan = coordinate_mission(setup, targets.waypoints[0],
                                  targets.waypoints[1:], config.n_rovers)
    except (SegmentFailure, NoPathFound) as err:
        partial = getattr(err, "partial_plan", None)
        if out_dir is not None and partial is not None:
            _write_trajectories(partial, out_dir)
        raise _rewrap("coordination", err) from err

    curve = accumulated_curve(plan.trajectories, metric_grid,
                              setup.rover.search_radius_m)
    report = build_report(config, trav, targets, plan, curve, metric_grid)
    result = MissionResult(config=config, dem=dem, trav=trav, pdm=pdm,
                           grid=grid, metric_grid=metric_grid, targets=targets,
                           plan=plan, curve=curve, report=report)
    if out_dir is not None:
        _write_trajectories(plan, out_dir)
        _write_curve(curve, os.path.join(out_dir, "curve.csv"))
        _dump_json(os.path.join(out_dir, "report.json"), report.to_dict())
    return result


def build_report(config: MissionConfig, trav: TraversabilityMap,
                 targets: TargetList, plan: TeamPlan, curve: np.ndarray,
                 metric_grid: SearchGrid) -> MissionReport:
    exceed, fraction = compliance_metric(plan.trajectories)
    n_samples = sum(t.samples.shape[0] for t in plan.trajectories)
    distances = plan.distances_m
    durations = tuple(t.duration_s for t in plan.trajectories)
    min_sep = plan.min_separation_m()
    return MissionReport(
        seed=config.seed,
        n_rovers=plan.n_rovers,
        n_targets=len(targets.waypoints) - 1,
        target_score=targets.score,
        terrain_pct=terrain_stats(trav),
        distances_m=distances,
        durations_s=durations,
        mean_distance_m=float(np.mean(distances)),
        mean_duration_s=float(np.mean(durations)),
        total_distance_m=float(np.sum(distances)),
        total_time_s=plan.total_time_s,
        exceedances=exceed,
        samples=n_samples,
        compliance=fraction,
        min_separation_m=min_sep if math.isfinite(min_sep) else -1.0,
        d_safe_m=plan.d_safe_m,
        retries_per_segment=plan.retries_per_segment,
        curve_terminal_mass=float(curve[-1, 1]),
        total_mass=metric_grid.total_mass,
    )


def attitude_check(trajectories, dem: DemGrid, tol_deg: float = 1e-9) -> int:
    """Samples whose logged attitude disagrees with the terrain (should be 0)."""
    bad = 0
    for traj in trajectories:
        s = traj.samples
        pitch, roll = surface_attitude_many(dem, s[:, 1], s[:, 2], s[:, 6])
        bad += int(np.count_nonzero((np.abs(pitch - s[:, 5]) > tol_deg)
                                    | (np.abs(roll - s[:, 4]) > tol_deg)))
    return bad


def _write_trajectories(plan: TeamPlan, out_dir) -> None:
    for traj in plan.trajectories:
        save_trajectory_csv(traj, os.path.join(out_dir,
                                               f"rover_{traj.rover_id}.csv"))


def _write_curve(curve: np.ndarray, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write("mean_distance_m,accumulated_mass\n")
        for d, p in curve:
            fh.write(f"{float(d)!r},{float(p)!r}\n")


def _dump_json(path, data: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")
