"""Multi-rover exploration planning: terrain analysis, probabilistic target
generation, terrain-aware RRT* segment planning, closed-loop rover simulation
and prioritized team coordination, wrapped in a deterministic mission
pipeline."""

from .config import (ConfigError, MissionConfig, PdmConfig, SearchConfig,
                     SiteConfig, config_from_dict, config_to_dict, load_config,
                     save_config)
from .coordination import (ConflictReport, CoordinationState, SegmentFailure,
                           TeamPlan, TeamSetup, assign_rover_goals,
                           check_conflict, coordinate_mission,
                           coordinate_segment, nudge_passable)
from .mission import (MissionError, MissionReport, MissionResult,
                      accumulated_curve, attitude_check, build_report,
                      compliance_metric, plan_targets, prepare_pdm,
                      prepare_terrain, run_mission)
from .pdm import (Gaussian2D, Pdm, SearchGrid, WarmingSchedule, conv_value,
                  eval_p, eval_p_many, load_pdm, random_pdm, rasterize,
                  save_grid_csv, save_pdm, warm)
from .rover import (ControllerState, RoverParams, RoverState, SimSettings,
                    SimulationError, Trajectory, initial_state, los_guidance,
                    pid_control, save_trajectory_csv, simulate_path,
                    step_dynamics)
from .rrt import (CostWeights, EdgeMetrics, NoPathFound, PlanRegion,
                  PlannedPath, PlannerSettings, node_cost,
                  path_attitude_profile, plan_segment, save_path_csv)
from .search import (CellPath, TargetList, accumulated_probability,
                     lhc_gw_conv, lhc_path, lhc_step, load_targets_csv,
                     save_targets_csv)
from .terrain import (ClassFractions, DemFormatError, DemGrid, PoseOnTerrain,
                      TerrainClass, TraversabilityMap,
                      TraversabilityThresholds, classify, load_dem, save_dem,
                      slope_map, surface_attitude_many, surface_query,
                      surface_state, synth_terrain, terrain_stats,
                      traversability)

__version__ = "0.1.0"

__all__ = [
    "ClassFractions", "CellPath", "ConfigError", "ConflictReport",
    "ControllerState", "CoordinationState", "CostWeights", "DemFormatError",
    "DemGrid", "EdgeMetrics", "Gaussian2D", "MissionConfig", "MissionError",
    "MissionReport", "MissionResult", "NoPathFound", "Pdm", "PdmConfig",
    "PlanRegion", "PlannedPath", "PlannerSettings", "PoseOnTerrain",
    "RoverParams", "RoverState", "SearchConfig", "SearchGrid",
    "SegmentFailure", "SimSettings", "SimulationError", "SiteConfig",
    "TargetList", "TeamPlan", "TeamSetup", "TerrainClass", "Trajectory",
    "TraversabilityMap", "TraversabilityThresholds", "WarmingSchedule",
    "accumulated_curve", "accumulated_probability", "assign_rover_goals",
    "attitude_check", "build_report", "check_conflict", "classify",
    "compliance_metric", "config_from_dict", "config_to_dict", "conv_value",
    "coordinate_mission", "coordinate_segment", "eval_p", "eval_p_many",
    "initial_state", "lhc_gw_conv", "lhc_path", "lhc_step", "load_config",
    "load_dem", "load_pdm", "load_targets_csv", "los_guidance", "node_cost",
    "nudge_passable", "path_attitude_profile", "pid_control", "plan_segment",
    "plan_targets", "prepare_pdm", "prepare_terrain", "random_pdm",
    "rasterize", "run_mission", "save_config", "save_dem", "save_grid_csv",
    "save_path_csv", "save_pdm", "save_targets_csv", "save_trajectory_csv",
    "simulate_path", "slope_map", "step_dynamics", "surface_attitude_many",
    "surface_query", "surface_state", "synth_terrain", "terrain_stats",
    "traversability", "warm",
]
