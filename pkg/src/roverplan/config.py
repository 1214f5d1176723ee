"""Mission configuration: defaults, JSON round-trip and validation.

One master seed drives every random stage; stage streams are derived from it
with fixed labels (see coordination.SEED_*), so a config file fully
determines a scenario. The JSON layout mirrors the dataclass sections; any
unknown key is an error rather than a silent ignore.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

from .coordination import TeamSetup
from .rover import ControllerState, RoverParams, SimSettings
from .rrt import CostWeights, PlannerSettings
from .terrain import DemGrid, TraversabilityMap


class ConfigError(ValueError):
    """Bad mission configuration (unknown key, invalid value, missing file)."""


@dataclass(frozen=True)
class SiteConfig:
    """Synthetic site parameters, or a DEM file that overrides them."""

    width_m: float = 150.0
    height_m: float = 150.0
    cell_size_m: float = 0.25
    amplitude_m: float = 2.0
    smoothness_m: float = 14.0
    octaves: int = 3
    dem_file: str | None = None

    def __post_init__(self):
        if self.dem_file is None:
            if min(self.width_m, self.height_m, self.cell_size_m) <= 0:
                raise ConfigError("site dimensions must be positive")
            if self.amplitude_m < 0 or self.smoothness_m <= 0 or self.octaves < 1:
                raise ConfigError("bad synthetic terrain parameters")


@dataclass(frozen=True)
class PdmConfig:
    """Gaussian-mixture belief map and its planning rasterization."""

    components: int = 4
    cell_size_m: float = 5.0
    margin_m: float = 10.0
    eig_min_m2: float = 16.0
    eig_max_m2: float = 144.0

    def __post_init__(self):
        if self.components < 1:
            raise ConfigError("need at least one mixture component")
        if self.cell_size_m <= 0 or self.margin_m < 0:
            raise ConfigError("bad PDM grid parameters")
        if not 0 < self.eig_min_m2 <= self.eig_max_m2:
            raise ConfigError("bad covariance eigenvalue range")


@dataclass(frozen=True)
class SearchConfig:
    """Target-generation knobs: climb budget and warming depth."""

    budget: int = 64
    warming_steps: int = 4
    start_row: int | None = None
    start_col: int | None = None

    def __post_init__(self):
        if self.budget < 1 or self.warming_steps < 1:
            raise ConfigError("budget and warming_steps must be >= 1")


@dataclass(frozen=True)
class MissionConfig:
    seed: int = 0
    n_rovers: int = 5
    d_safe_m: float = 1.0
    max_retries: int = 20
    spacing_m: float = 1.0
    metric_cell_m: float = 1.0
    site: SiteConfig = SiteConfig()
    pdm: PdmConfig = PdmConfig()
    search: SearchConfig = SearchConfig()
    weights: CostWeights = CostWeights()
    planner: PlannerSettings = PlannerSettings()
    rover: RoverParams = RoverParams()
    controller: ControllerState = field(default_factory=ControllerState)
    sim: SimSettings = SimSettings()

    def __post_init__(self):
        if self.n_rovers < 1:
            raise ConfigError("n_rovers must be >= 1")
        if self.d_safe_m <= 0 or self.spacing_m <= 0 or self.metric_cell_m <= 0:
            raise ConfigError("d_safe, spacing and metric cell must be positive")
        if self.max_retries < 0:
            raise ConfigError("max_retries must be non-negative")

    def team_setup(self, dem: DemGrid, trav: TraversabilityMap) -> TeamSetup:
        """Coordination bundle for this config over prepared terrain."""
        return TeamSetup(dem=dem, trav=trav, weights=self.weights,
                         planner=self.planner, rover=self.rover,
                         controller=self.controller, sim=self.sim,
                         d_safe_m=self.d_safe_m, max_retries=self.max_retries,
                         spacing_m=self.spacing_m, master_seed=self.seed)


_SECTIONS = {
    "site": SiteConfig,
    "pdm": PdmConfig,
    "search": SearchConfig,
    "weights": CostWeights,
    "planner": PlannerSettings,
    "rover": RoverParams,
    "controller": ControllerState,
    "sim": SimSettings,
}
_SCALARS = ("seed", "n_rovers", "d_safe_m", "max_retries", "spacing_m",
            "metric_cell_m")


def _public_fields(cls) -> set[str]:
    return {f.name for f in dataclasses.fields(cls)
            if not f.name.startswith("_")}


def config_from_dict(data: dict) -> MissionConfig:
    """Build a MissionConfig from a JSON-shaped dict; rejects unknown keys."""
    if not isinstance(data, dict):
        raise ConfigError(f"config root must be an object, got {type(data).__name__}")
    unknown = set(data) - set(_SECTIONS) - set(_SCALARS)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kwargs = {}
    for key in _SCALARS:
        if key in data:
            kwargs[key] = data[key]
    for key, cls in _SECTIONS.items():
        if key not in data:
            continue
        section = data[key]
        if not isinstance(section, dict):
            raise ConfigError(f"config section '{key}' must be an object")
        bad = set(section) - _public_fields(cls)
        if bad:
            raise ConfigError(f"unknown keys in '{key}': {sorted(bad)}")
        try:
            kwargs[key] = cls(**section)
        except (TypeError, ValueError) as err:
            raise ConfigError(f"bad '{key}' section: {err}") from err
    try:
        return MissionConfig(**kwargs)
    except (TypeError, ValueError) as err:
        raise ConfigError(str(err)) from err


def config_to_dict(config: MissionConfig) -> dict:
    """JSON-ready dict mirroring config_from_dict's layout."""
    out: dict = {key: getattr(config, key) for key in _SCALARS}
    for key, cls in _SECTIONS.items():
        section = getattr(config, key)
        out[key] = {name: getattr(section, name) for name in
                    sorted(_public_fields(cls))}
    return out


def load_config(path) -> MissionConfig:
    """Read a mission config JSON file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    except json.JSONDecodeError as err:
        raise ConfigError(f"invalid JSON in {path}: {err}") from err
    return config_from_dict(data)


def save_config(config: MissionConfig, path) -> None:
    """Write a config as formatted JSON (a valid load_config input)."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config_to_dict(config), fh, indent=2, sort_keys=True)
        fh.write("\n")
