"""Shared fixtures: the desk-scale mission battery reused across test files.

Desk missions (150 m synthetic site, 16 targets, 5 rovers) are expensive, so
the three batteries (slip on, slip off, single rover) are session-scoped and
computed once.
"""
import numpy as np
import pytest

from roverplan import (ControllerState, MissionConfig, PdmConfig,
                       PlannerSettings, SearchConfig, SimSettings,
                       run_mission)

DESK_SEEDS = tuple(range(1, 11))
DESK_SLIP_GAIN = 0.2


def desk_config(seed: int, slip_gain: float = 0.0,
                n_rovers: int = 5) -> MissionConfig:
    """Reference 150 m scenario: 16 targets, tuned spacing and safety gap."""
    return MissionConfig(
        seed=seed,
        n_rovers=n_rovers,
        pdm=PdmConfig(eig_min_m2=9.0, eig_max_m2=64.0),
        search=SearchConfig(budget=16, warming_steps=4),
        planner=PlannerSettings(max_nodes=300, attitude_margin_deg=1.5),
        controller=ControllerState(accept_radius_m=0.3),
        sim=SimSettings(slip_gain=slip_gain),
        d_safe_m=0.7,
        spacing_m=1.5,
    )


@pytest.fixture(scope="session")
def desk_slip_off():
    return {seed: run_mission(desk_config(seed)) for seed in DESK_SEEDS}


@pytest.fixture(scope="session")
def desk_slip_on():
    return {seed: run_mission(desk_config(seed, slip_gain=DESK_SLIP_GAIN))
            for seed in DESK_SEEDS}


@pytest.fixture(scope="session")
def desk_solo():
    return {seed: run_mission(desk_config(seed, n_rovers=1))
            for seed in DESK_SEEDS}


@pytest.fixture()
def flat_dem():
    from roverplan import DemGrid
    return DemGrid(origin=(0.0, 0.0), cell_size=0.25,
                   elevation=np.zeros((80, 80)))
