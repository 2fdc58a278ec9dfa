"""Planar omnidirectional base with obstacles and a forward range sensor.

The base is a circle driven in body frame (vx forward, vy lateral, omega).
Integration uses the midpoint heading so that a command followed by its
negation retraces exactly (up to float rounding). Obstacles are axis-aligned
rectangles; a collision freezes the pose and latches a counter. The
ultrasonic sensor looks along the heading and reports clearance for the
swept circle, which feeds the emergency-stop rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from ..errors import ValidationError


@dataclass(frozen=True)
class ObstacleRect:
    x0: float
    y0: float
    x1: float
    y1: float

    def __post_init__(self):
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise ValidationError("rectangle must have x0 < x1 and y0 < y1")

    def inflate(self, r: float) -> "ObstacleRect":
        return ObstacleRect(self.x0 - r, self.y0 - r, self.x1 + r, self.y1 + r)

    def contains(self, x: float, y: float) -> bool:
        return self.x0 <= x <= self.x1 and self.y0 <= y <= self.y1


@dataclass(frozen=True)
class RobotParams:
    radius_m: float = 0.15
    v_max: float = 0.5
    omega_max: float = 1.0
    accel_limit: float | None = 3.0  # m/s^2 slew on vx/vy; None disables
    alpha_limit: float | None = 8.0  # rad/s^2 slew on omega
    ultrasonic_range_m: float = 2.0
    estop_threshold_m: float = 0.15


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    theta: float


@dataclass(frozen=True)
class WorldState:
    pose: Pose = Pose(0.0, 0.0, 0.0)
    vx: float = 0.0  # actual body-frame velocities after slew limiting
    vy: float = 0.0
    omega: float = 0.0
    t_s: float = 0.0
    estop_active: bool = False
    collisions: int = 0
    frozen: bool = False
    obstacles: tuple[ObstacleRect, ...] = field(default=())
    params: RobotParams = field(default_factory=RobotParams)


def _slew(current: float, target: float, limit: float | None, dt: float) -> float:
    if limit is None:
        return target
    step = limit * dt
    return current + min(max(target - current, -step), step)


def _circle_hits_rect(x: float, y: float, r: float, rect: ObstacleRect) -> bool:
    cx = min(max(x, rect.x0), rect.x1)
    cy = min(max(y, rect.y0), rect.y1)
    return (x - cx) ** 2 + (y - cy) ** 2 <= r * r


def _ray_aabb(x: float, y: float, dx: float, dy: float, rect: ObstacleRect) -> float | None:
    """Entry distance of a ray into a rectangle (slab method), or None."""
    t_near, t_far = -math.inf, math.inf
    for p, d, lo, hi in ((x, dx, rect.x0, rect.x1), (y, dy, rect.y0, rect.y1)):
        if d == 0.0:
            if p < lo or p > hi:
                return None
            continue
        t1, t2 = (lo - p) / d, (hi - p) / d
        if t1 > t2:
            t1, t2 = t2, t1
        t_near = max(t_near, t1)
        t_far = min(t_far, t2)
        if t_near > t_far:
            return None
    if t_far < 0:
        return None
    return max(t_near, 0.0)


def ultrasonic_clearance(state: WorldState) -> float:
    """Forward clearance for the robot disc, capped at sensor range.

    Obstacles are inflated by the robot radius, so the returned distance is
    how far the robot can advance along its heading before touching.
    """
    p = state.params
    dx, dy = math.cos(state.pose.theta), math.sin(state.pose.theta)
    best = p.ultrasonic_range_m
    for rect in state.obstacles:
        t = _ray_aabb(state.pose.x, state.pose.y, dx, dy, rect.inflate(p.radius_m))
        if t is not None:
            best = min(best, t)
    return best


def step(state: WorldState, vx_cmd: float, vy_cmd: float, omega_cmd: float, dt_s: float) -> WorldState:
    """Advance one control period.

    Order of business: emergency-stop gate on the commanded velocities, slew
    limiting, midpoint-heading integration, collision check (a hit keeps the
    old pose, zeros motion and latches the collision counter; a frozen robot
    stays frozen). The estop clamps forward motion while clearance is below
    threshold; rotation and reverse stay available for recovery.
    """
    if not 0.0 < dt_s <= 0.05:
        raise ValidationError("dt_s must be in (0, 0.05]")
    for v in (vx_cmd, vy_cmd, omega_cmd):
        if not math.isfinite(v):
            raise ValidationError("velocity command must be finite")
    p = state.params
    vx_cmd = min(max(vx_cmd, -p.v_max), p.v_max)
    vy_cmd = min(max(vy_cmd, -p.v_max), p.v_max)
    omega_cmd = min(max(omega_cmd, -p.omega_max), p.omega_max)

    if state.frozen:
        return replace(state, vx=0.0, vy=0.0, omega=0.0, t_s=state.t_s + dt_s)

    clearance = ultrasonic_clearance(state)
    estop = clearance < p.estop_threshold_m
    if estop:
        vx_cmd = min(vx_cmd, 0.0)
        vy_cmd = 0.0

    vx = _slew(state.vx, vx_cmd, p.accel_limit, dt_s)
    vy = _slew(state.vy, vy_cmd, p.accel_limit, dt_s)
    omega = _slew(state.omega, omega_cmd, p.alpha_limit, dt_s)

    mid = state.pose.theta + 0.5 * omega * dt_s
    c, s = math.cos(mid), math.sin(mid)
    nx = state.pose.x + (vx * c - vy * s) * dt_s
    ny = state.pose.y + (vx * s + vy * c) * dt_s
    ntheta = state.pose.theta + omega * dt_s

    for rect in state.obstacles:
        if _circle_hits_rect(nx, ny, p.radius_m, rect):
            return replace(
                state,
                vx=0.0,
                vy=0.0,
                omega=0.0,
                t_s=state.t_s + dt_s,
                estop_active=estop,
                collisions=state.collisions + 1,
                frozen=True,
            )
    return replace(
        state,
        pose=Pose(nx, ny, ntheta),
        vx=vx,
        vy=vy,
        omega=omega,
        t_s=state.t_s + dt_s,
        estop_active=estop,
    )
