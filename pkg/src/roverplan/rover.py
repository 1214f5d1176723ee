"""Closed-loop rover traversal of a planned path.

The rover is a planar 3-DOF rigid body (surge, sway, yaw) in the standard
marine-vehicle state-space form: M dv/dt + (C(v) + D(v)) v + g = tau, with
pose kinematics d(eta)/dt = J(yaw) v. Height, roll and pitch carry no
dynamics of their own; they are slaved to the terrain surface under the
current (x, y, yaw) every step, which stands in for the suspension. Gravity
enters as the in-plane component resisting uphill motion.

Guidance is line-of-sight to the active waypoint; a heading PID commands the
yaw moment and a velocity PID the surge force. Integration is explicit Euler
at a fixed internal step (default 0.02 s) with samples logged at 10 Hz.
Optional slope-proportional lateral slip noise emulates wheel slip on
inclines; with the disturbance disabled the simulation is bitwise
deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .terrain import DemGrid, surface_state


class SimulationError(RuntimeError):
    """Simulation left its validity envelope (e.g. rover off the map)."""


def _wrap_deg(angle: float) -> float:
    """Wrap to [-180, 180)."""
    return (angle + 180.0) % 360.0 - 180.0


@dataclass(frozen=True)
class RoverParams:
    """Planar rigid-body, damping and actuator parameters.

    Defaults describe a small skid-steer rover; damping is diagonal with
    linear plus quadratic terms per axis. ``max_speed_mps`` acts as a hard
    governor on the planar body speed.
    """

    mass_kg: float = 12.0
    yaw_inertia_kgm2: float = 0.35
    damp_surge: float = 18.0
    damp_surge_q: float = 8.0
    damp_sway: float = 60.0
    damp_sway_q: float = 20.0
    damp_yaw: float = 1.2
    damp_yaw_q: float = 0.4
    max_thrust_n: float = 30.0
    max_yaw_moment_nm: float = 6.0
    max_speed_mps: float = 1.0
    footprint_radius_m: float = 0.3
    search_radius_m: float = 0.5
    gravity_mps2: float = 3.71

    def __post_init__(self):
        if self.mass_kg <= 0 or self.yaw_inertia_kgm2 <= 0:
            raise ValueError("mass and yaw inertia must be positive")
        if min(self.damp_surge, self.damp_surge_q, self.damp_sway,
               self.damp_sway_q, self.damp_yaw, self.damp_yaw_q) < 0:
            raise ValueError("damping terms must be non-negative")
        if min(self.max_thrust_n, self.max_yaw_moment_nm, self.max_speed_mps,
               self.footprint_radius_m, self.search_radius_m) <= 0:
            raise ValueError("limits and radii must be positive")


class RoverState(NamedTuple):
    """Pose (terrain-slaved z/roll/pitch), body velocities and time."""

    x_m: float
    y_m: float
    z_m: float
    roll_deg: float
    pitch_deg: float
    yaw_deg: float
    surge_mps: float
    sway_mps: float
    yaw_rate_dps: float
    t_s: float


@dataclass
class ControllerState:
    """PID gains plus loop memory; heading gains are per degree of error."""

    heading_kp: float = 0.08
    heading_ki: float = 0.002
    heading_kd: float = 0.02
    speed_kp: float = 40.0
    speed_ki: float = 12.0
    speed_kd: float = 0.0
    accept_radius_m: float = 0.5
    cruise_speed_mps: float = 0.8
    max_force_n: float = 30.0
    max_moment_nm: float = 6.0
    _h_int: float = field(default=0.0, repr=False, compare=False)
    _h_prev: float | None = field(default=None, repr=False, compare=False)
    _s_int: float = field(default=0.0, repr=False, compare=False)
    _s_prev: float | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        gains = (self.heading_kp, self.heading_ki, self.heading_kd,
                 self.speed_kp, self.speed_ki, self.speed_kd)
        if any(g < 0 for g in gains):
            raise ValueError("PID gains must be non-negative")
        if self.accept_radius_m <= 0:
            raise ValueError("acceptance radius must be positive")

    def reset(self) -> None:
        self._h_int = 0.0
        self._h_prev = None
        self._s_int = 0.0
        self._s_prev = None


def los_guidance(state: RoverState, waypoint) -> float:
    """Desired heading (deg) pointing at the waypoint; current yaw if coincident."""
    dx = waypoint[0] - state.x_m
    dy = waypoint[1] - state.y_m
    if dx == 0.0 and dy == 0.0:
        return state.yaw_deg
    return math.degrees(math.atan2(dy, dx))


def _pid(err: float, integ: float, prev: float | None, kp: float, ki: float,
         kd: float, dt: float, limit: float) -> tuple[float, float, float]:
    """One PID update; returns (output, new integral, stored error)."""
    integ += err * dt
    if ki > 0.0:
        bound = limit / ki
        integ = min(max(integ, -bound), bound)
    deriv = 0.0 if prev is None else (err - prev) / dt
    out = kp * err + ki * integ + kd * deriv
    return min(max(out, -limit), limit), integ, err


def pid_control(ctrl: ControllerState, heading_error_deg: float,
                speed_error_mps: float, dt: float) -> tuple[float, float]:
    """(surge force N, yaw moment N*m) from the two PID loops.

    The heading error is wrapped to the shortest angle; both integrators are
    clamped so their contribution alone cannot exceed the actuator limit.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    herr = _wrap_deg(heading_error_deg)
    moment, ctrl._h_int, ctrl._h_prev = _pid(
        herr, ctrl._h_int, ctrl._h_prev, ctrl.heading_kp, ctrl.heading_ki,
        ctrl.heading_kd, dt, ctrl.max_moment_nm)
    force, ctrl._s_int, ctrl._s_prev = _pid(
        speed_error_mps, ctrl._s_int, ctrl._s_prev, ctrl.speed_kp,
        ctrl.speed_ki, ctrl.speed_kd, dt, ctrl.max_force_n)
    return force, moment


def step_dynamics(state: RoverState, tau, params: RoverParams, dt: float,
                  dem: DemGrid | None = None) -> RoverState:
    """One explicit-Euler step of the planar body under actuator vector tau.

    tau = (surge force N, yaw moment N*m), clamped to the actuator limits.
    With a DEM, z/roll/pitch are re-slaved to the surface after the position
    update; without one the terrain attitude is held (flat-world testing).
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    force = min(max(float(tau[0]), -params.max_thrust_n), params.max_thrust_n)
    moment = min(max(float(tau[1]), -params.max_yaw_moment_nm),
                 params.max_yaw_moment_nm)

    m = params.mass_kg
    g = params.gravity_mps2
    u, v = state.surge_mps, state.sway_mps
    r = math.radians(state.yaw_rate_dps)

    fx = force - (params.damp_surge + params.damp_surge_q * abs(u)) * u \
        - m * g * math.sin(math.radians(state.pitch_deg))
    fy = -(params.damp_sway + params.damp_sway_q * abs(v)) * v \
        - m * g * math.sin(math.radians(state.roll_deg))
    fn = moment - (params.damp_yaw + params.damp_yaw_q * abs(r)) * r

    u_new = u + dt * (fx / m + v * r)
    v_new = v + dt * (fy / m - u * r)
    r_new = r + dt * fn / params.yaw_inertia_kgm2

    speed = math.hypot(u_new, v_new)
    if speed > params.max_speed_mps:
        scale = params.max_speed_mps / speed
        u_new *= scale
        v_new *= scale

    yaw = math.radians(state.yaw_deg)
    cy, sy = math.cos(yaw), math.sin(yaw)
    x = state.x_m + dt * (u * cy - v * sy)
    y = state.y_m + dt * (u * sy + v * cy)
    yaw_deg = _wrap_deg(state.yaw_deg + dt * math.degrees(r))

    if dem is not None:
        z, pitch, roll, _, _ = surface_state(dem, x, y, yaw_deg)
    else:
        z, pitch, roll = state.z_m, state.pitch_deg, state.roll_deg
    return RoverState(x, y, z, roll, pitch, yaw_deg, u_new, v_new,
                      math.degrees(r_new), state.t_s + dt)


def initial_state(dem: DemGrid, x: float, y: float, yaw_deg: float = 0.0,
                  t_s: float = 0.0) -> RoverState:
    """At-rest state slaved to the terrain at (x, y)."""
    z, pitch, roll, _, _ = surface_state(dem, x, y, yaw_deg)
    return RoverState(x, y, z, roll, pitch, yaw_deg, 0.0, 0.0, 0.0, t_s)


@dataclass(frozen=True)
class Trajectory:
    """Fixed-rate samples of one rover's traverse.

    ``samples`` columns: t_s, x_m, y_m, z_m, roll_deg, pitch_deg, yaw_deg,
    speed_mps. Time stamps are exactly (start index + k) / rate_hz.
    """

    samples: np.ndarray
    rover_id: int = 0
    priority: int = 0
    rate_hz: float = 10.0
    timed_out: bool = False

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim != 2 or s.shape[1] != 8 or s.shape[0] < 1:
            raise ValueError(f"samples must be (n, 8), got {s.shape}")
        if s.shape[0] > 1:
            steps = np.diff(s[:, 0])
            if np.any(np.abs(steps - 1.0 / self.rate_hz) > 1e-9):
                raise ValueError("sample times must advance by 1/rate_hz")
        s.flags.writeable = False
        object.__setattr__(self, "samples", s)

    @property
    def times(self) -> np.ndarray:
        return self.samples[:, 0]

    @property
    def xy(self) -> np.ndarray:
        return self.samples[:, 1:3]

    @property
    def duration_s(self) -> float:
        return float(self.samples[-1, 0] - self.samples[0, 0])

    @property
    def distance_m(self) -> float:
        return float(np.sum(np.hypot(np.diff(self.samples[:, 1]),
                                     np.diff(self.samples[:, 2]))))

    def final_state(self) -> RoverState:
        t, x, y, z, roll, pitch, yaw, _ = self.samples[-1]
        return RoverState(x, y, z, roll, pitch, yaw, 0.0, 0.0, 0.0, t)


@dataclass(frozen=True)
class SimSettings:
    dt_s: float = 0.02
    log_rate_hz: float = 10.0
    timeout_s: float = 600.0
    slip_gain: float = 0.0

    def __post_init__(self):
        sub = 1.0 / (self.dt_s * self.log_rate_hz)
        if abs(sub - round(sub)) > 1e-9 or sub < 1:
            raise ValueError("log rate must divide the internal step rate")
        if self.timeout_s <= 0 or self.slip_gain < 0:
            raise ValueError("timeout must be positive, slip gain non-negative")

    @property
    def substeps(self) -> int:
        return round(1.0 / (self.dt_s * self.log_rate_hz))


def simulate_path(state: RoverState, path, params: RoverParams,
                  ctrl: ControllerState, dem: DemGrid,
                  settings: SimSettings = SimSettings(),
                  seed=None, start_index: int = 0,
                  rover_id: int = 0, priority: int = 0,
                  hold_samples: int = 0) -> Trajectory:
    """Drive the rover along the path waypoints and log at the sample rate.

    Waypoints advance when within the controller's acceptance radius; the run
    ends at the first logging instant with the final waypoint reached, or at
    timeout (flagged on the returned trajectory, which is still complete).
    ``start_index`` offsets the logged time stamps onto a shared mission
    clock: stamp k is (start_index + k) / rate. The slip disturbance draws
    from ``seed`` only when settings.slip_gain > 0. A positive
    ``hold_samples`` parks the rover for that many samples before it departs
    (used to stagger around higher-priority traffic).
    """
    waypoints = getattr(path, "waypoints", None)
    wp = np.asarray(waypoints if waypoints is not None else path, dtype=float)
    if wp.ndim != 2 or wp.shape[0] < 1:
        raise ValueError("path must provide at least one waypoint")
    ctrl.reset()
    rng = np.random.default_rng(seed) if settings.slip_gain > 0 else None

    dt = settings.dt_s
    sub = settings.substeps
    rate = settings.log_rate_hz
    accept2 = ctrl.accept_radius_m ** 2
    last = wp.shape[0] - 1
    wi = 0
    rows = []
    timed_out = False
    k = 0

    while True:
        # advance the active waypoint (possibly past several close ones)
        while wi < last and ((wp[wi, 0] - state.x_m) ** 2
                             + (wp[wi, 1] - state.y_m) ** 2) <= accept2:
            wi += 1
        done = wi == last and ((wp[last, 0] - state.x_m) ** 2
                               + (wp[last, 1] - state.y_m) ** 2) <= accept2

        t = (start_index + k) / rate
        speed = math.hypot(state.surge_mps, state.sway_mps)
        rows.append((t, state.x_m, state.y_m, state.z_m, state.roll_deg,
                     state.pitch_deg, state.yaw_deg, speed))
        if done:
            break
        if k / rate >= settings.timeout_s:
            timed_out = True
            break
        k += 1
        if k <= hold_samples:
            continue

        for _ in range(sub):
            desired = los_guidance(state, (wp[wi, 0], wp[wi, 1]))
            herr = _wrap_deg(desired - state.yaw_deg)
            # slow down through tight turns to keep the track tight
            cmd = ctrl.cruise_speed_mps * min(1.0, max(
                0.15, math.cos(math.radians(herr))))
            force, moment = pid_control(ctrl, herr, cmd - state.surge_mps, dt)
            try:
                state = step_dynamics(state, (force, moment), params, dt, dem)
            except ValueError as err:
                raise SimulationError(
                    f"rover {rover_id} left the map near "
                    f"({state.x_m:.2f}, {state.y_m:.2f})") from err
            if rng is not None:
                # surface gradient magnitude recovered from the slaved attitude
                slope = math.hypot(math.tan(math.radians(state.pitch_deg)),
                                   math.tan(math.radians(state.roll_deg)))
                if slope > 0.0:
                    kick = settings.slip_gain * slope * math.sqrt(dt) \
                        * rng.standard_normal()
                    state = state._replace(sway_mps=state.sway_mps + kick)

    return Trajectory(samples=np.asarray(rows), rover_id=rover_id,
                      priority=priority, rate_hz=rate, timed_out=timed_out)


def save_trajectory_csv(traj: Trajectory, file) -> None:
    """Write samples as CSV with the standard column header."""
    with open(file, "w", encoding="ascii") as fh:
        fh.write("t_s,x_m,y_m,z_m,roll_deg,pitch_deg,yaw_deg,speed_mps\n")
        for row in traj.samples:
            fh.write(",".join(repr(float(c)) for c in row) + "\n")
