"""Grasp and transport physics for the two-finger gripper.

Friction against the object surface is modelled from roughness: coarser
surfaces (higher Ra) grip better. The force needed to hold an object of
mass m between two pads is F = s * m * g / (2 * mu) with safety factor s.
Grasp attempts resolve in a fixed priority (missed, damaged, held/slip);
transport hazards (spill, drop, scrape) accumulate over steps in a monitor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from ..errors import RejectedActionError, ValidationError

G = 9.81
SAFETY_FACTOR = 1.5
RELEASE_SPEED_LIMIT = 0.02  # m/s; faster than this and release is refused
TIP_MASS_KG = 0.350  # light release of anything heavier knocks it over

# Piecewise-linear mu(Ra), clamped outside the anchor range.
_MU_TABLE = ((0.0, 0.25), (50.0, 0.55), (100.0, 0.85))


def friction_coefficient(roughness_ra_um: float) -> float:
    if not math.isfinite(roughness_ra_um) or roughness_ra_um < 0:
        raise ValidationError("roughness must be finite and non-negative")
    pts = _MU_TABLE
    if roughness_ra_um >= pts[-1][0]:
        return pts[-1][1]
    for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
        if roughness_ra_um <= x1:
            return y0 + (y1 - y0) * (roughness_ra_um - x0) / (x1 - x0)
    raise AssertionError("unreachable")


def grit_to_roughness(grit: int | None) -> float:
    """Nominal Ra in micrometres for a sandpaper grit wrapped on the object.

    No paper reads ~5 um (smooth plastic/glass), 1200-grit ~30 um, 120-grit
    ~90 um; other grits interpolate on 1/grit, which tracks particle size
    well enough for this model.
    """
    if grit is None or grit <= 0:
        return 5.0
    (g0, r0), (g1, r1) = (1200, 30.0), (120, 90.0)
    i0, i1 = 1.0 / g0, 1.0 / g1
    frac = (1.0 / grit - i0) / (i1 - i0)
    return min(max(r0 + frac * (r1 - r0), 5.0), 120.0)


def required_grip_force(mass_kg: float, mu: float, safety: float = SAFETY_FACTOR) -> float:
    if mass_kg < 0 or mu <= 0 or safety <= 0:
        raise ValidationError("mass must be non-negative; mu and safety positive")
    return safety * mass_kg * G / (2.0 * mu)


@dataclass(frozen=True)
class GraspObject:
    name: str
    mass_kg: float
    width_m: float
    roughness_ra_um: float
    fragility_n: float  # pad force that crushes it
    has_liquid: bool = False
    fill_fraction: float = 0.0

    def __post_init__(self):
        if self.mass_kg <= 0 or self.width_m <= 0:
            raise ValidationError("object mass and width must be positive")
        if self.fragility_n <= 0:
            raise ValidationError("fragility must be positive")
        if not 0.0 <= self.fill_fraction <= 1.0:
            raise ValidationError("fill_fraction must be in [0, 1]")

    @property
    def mu(self) -> float:
        return friction_coefficient(self.roughness_ra_um)

    @property
    def required_force_n(self) -> float:
        return required_grip_force(self.mass_kg, self.mu)


class GraspOutcome(str, Enum):
    HELD = "HELD"
    SLIP = "SLIP"
    MISSED = "MISSED"
    DAMAGED = "DAMAGED"


def attempt_grasp(
    obj: GraspObject,
    applied_force_n: float,
    aperture_m: float,
    misalignment_m: float = 0.0,
) -> GraspOutcome:
    """Resolve a closing gripper against an object.

    Checks run in priority order: geometry first (a miss cannot damage),
    then crushing, then the friction budget. Exactly meeting the required
    force counts as held; anything less makes contact but slips.
    """
    if applied_force_n < 0 or aperture_m < 0 or misalignment_m < 0:
        raise ValidationError("grasp inputs must be non-negative")
    if misalignment_m > 0.04 or aperture_m < obj.width_m:
        return GraspOutcome.MISSED
    if applied_force_n > obj.fragility_n:
        return GraspOutcome.DAMAGED
    if applied_force_n >= obj.required_force_n:
        return GraspOutcome.HELD
    return GraspOutcome.SLIP


class ReleaseStrategy(str, Enum):
    GRADUAL = "GRADUAL"  # ramp open over 1.5 s
    STANDARD = "STANDARD"  # 0.5 s
    LIGHT = "LIGHT"  # snap open, 0.2 s

    @property
    def open_time_s(self) -> float:
        return {"GRADUAL": 1.5, "STANDARD": 0.5, "LIGHT": 0.2}[self.value]


class ReleaseOutcome(str, Enum):
    PLACED = "PLACED"
    SPILLED = "SPILLED"
    TIPPED = "TIPPED"


def release(obj: GraspObject, strategy: ReleaseStrategy, speed_mps: float) -> ReleaseOutcome:
    """Open the gripper over a supported surface.

    Releasing while still moving is refused outright. A nearly full liquid
    container needs the gradual ramp or it sloshes over; snapping the pads
    open under a heavy object lets it lurch and topple.
    """
    if speed_mps < 0 or not math.isfinite(speed_mps):
        raise ValidationError("speed must be finite and non-negative")
    if speed_mps >= RELEASE_SPEED_LIMIT:
        raise RejectedActionError("cannot release while the base is moving")
    if obj.has_liquid and obj.fill_fraction > 0.8 and strategy is not ReleaseStrategy.GRADUAL:
        return ReleaseOutcome.SPILLED
    if strategy is ReleaseStrategy.LIGHT and obj.mass_kg > TIP_MASS_KG:
        return ReleaseOutcome.TIPPED
    return ReleaseOutcome.PLACED


@dataclass
class Manipulator:
    """Holds the gripper's contact state between grasp and release."""

    held: GraspObject | None = None
    grip_force_n: float = 0.0

    @property
    def slipping(self) -> bool:
        return self.held is not None and self.grip_force_n < self.held.required_force_n

    def grasp(
        self,
        obj: GraspObject,
        applied_force_n: float,
        aperture_m: float,
        misalignment_m: float = 0.0,
    ) -> GraspOutcome:
        if self.held is not None:
            raise RejectedActionError("already holding an object")
        outcome = attempt_grasp(obj, applied_force_n, aperture_m, misalignment_m)
        if outcome in (GraspOutcome.HELD, GraspOutcome.SLIP):
            # SLIP still makes contact; the transport monitor decides whether
            # an uncorrected deficit turns into a drop.
            self.held = obj
            self.grip_force_n = applied_force_n
        return outcome

    def adjust_force(self, delta_n: float) -> float:
        if self.held is None:
            raise RejectedActionError("no object held")
        self.grip_force_n = max(self.grip_force_n + delta_n, 0.0)
        return self.grip_force_n

    def release(self, strategy: ReleaseStrategy, speed_mps: float) -> ReleaseOutcome:
        if self.held is None:
            raise RejectedActionError("no object held")
        outcome = release(self.held, strategy, speed_mps)
        self.held = None
        self.grip_force_n = 0.0
        return outcome


class TransportHazard(str, Enum):
    SPILL = "SPILL"
    DROP = "DROP"
    SCRAPE = "SCRAPE"


@dataclass
class TransportMonitor:
    """Accumulates hazards while an object is carried.

    Spill: angular acceleration beyond 3 rad/s^2 or linear acceleration
    beyond 2 m/s^2 sustained for more than 100 ms with a liquid payload.
    Drop: grip force below the requirement (uncorrected slip) for more than
    500 ms. Scrape: the carried object widens the robot by 2 cm per side;
    passing closer than that to an obstacle scuffs it.
    """

    obj: GraspObject
    spill_alpha_limit: float = 3.0  # rad/s^2
    spill_accel_limit: float = 2.0  # m/s^2
    spill_sustain_s: float = 0.100
    drop_deficit_s: float = 0.500
    scrape_inflation_m: float = 0.02
    _rough_s: float = field(default=0.0, init=False)
    _deficit_s: float = field(default=0.0, init=False)
    hazards: list[TransportHazard] = field(default_factory=list, init=False)

    def update(
        self,
        dt_s: float,
        grip_force_n: float,
        accel_mps2: float,
        alpha_radps2: float,
        min_obstacle_clearance_m: float = math.inf,
    ) -> list[TransportHazard]:
        """Advance the monitor one step; returns hazards newly raised."""
        if dt_s <= 0:
            raise ValidationError("dt_s must be positive")
        raised: list[TransportHazard] = []

        if abs(alpha_radps2) > self.spill_alpha_limit or abs(accel_mps2) > self.spill_accel_limit:
            self._rough_s += dt_s
        else:
            self._rough_s = 0.0
        if (
            self.obj.has_liquid
            and self.obj.fill_fraction > 0.0
            and self._rough_s > self.spill_sustain_s
            and TransportHazard.SPILL not in self.hazards
        ):
            raised.append(TransportHazard.SPILL)

        if grip_force_n < self.obj.required_force_n:
            self._deficit_s += dt_s
        else:
            self._deficit_s = 0.0
        if self._deficit_s > self.drop_deficit_s and TransportHazard.DROP not in self.hazards:
            raised.append(TransportHazard.DROP)

        if min_obstacle_clearance_m < self.scrape_inflation_m and TransportHazard.SCRAPE not in self.hazards:
            raised.append(TransportHazard.SCRAPE)

        self.hazards.extend(raised)
        return raised

    @property
    def dropped(self) -> bool:
        return TransportHazard.DROP in self.hazards

    @property
    def spilled(self) -> bool:
        return TransportHazard.SPILL in self.hazards
