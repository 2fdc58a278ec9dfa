"""Simulated robot: planar base, gripper physics, courses and metrics."""

from .grasp import (
    GraspObject,
    GraspOutcome,
    Manipulator,
    ReleaseOutcome,
    ReleaseStrategy,
    TransportHazard,
    TransportMonitor,
    attempt_grasp,
    friction_coefficient,
    grit_to_roughness,
    release,
    required_grip_force,
)
from .metrics import path_length_m, point_segment_distance, trajectory_deviation_cm
from .scenario import (
    GRIT_CLASSES,
    NAV_OBSTACLES,
    NAV_WAYPOINTS,
    TRANSFER_PICKUP,
    TRANSFER_WAYPOINTS,
    Scenario,
    grit_label,
    load_scenario,
    navigation_scenario,
    object_catalog,
    transfer_combos,
    transfer_scenario,
    with_surface,
)
from .world import ObstacleRect, Pose, RobotParams, WorldState, step, ultrasonic_clearance

__all__ = [
    "GRIT_CLASSES",
    "NAV_OBSTACLES",
    "NAV_WAYPOINTS",
    "TRANSFER_PICKUP",
    "TRANSFER_WAYPOINTS",
    "GraspObject",
    "GraspOutcome",
    "Manipulator",
    "ObstacleRect",
    "Pose",
    "ReleaseOutcome",
    "ReleaseStrategy",
    "RobotParams",
    "Scenario",
    "TransportHazard",
    "TransportMonitor",
    "WorldState",
    "attempt_grasp",
    "friction_coefficient",
    "grit_label",
    "grit_to_roughness",
    "load_scenario",
    "navigation_scenario",
    "object_catalog",
    "path_length_m",
    "point_segment_distance",
    "release",
    "required_grip_force",
    "step",
    "trajectory_deviation_cm",
    "transfer_combos",
    "transfer_scenario",
    "ultrasonic_clearance",
    "with_surface",
]
