"""Scenario files: worlds, courses and object catalogs.

A scenario is a small YAML document bundling obstacle rectangles, reference
waypoints, grasp objects and a seed. Builders below provide the stock
navigation course (an 8 m polyline with five turns) and the transfer bench
objects; experiment runners accept a scenario override from disk.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from ..errors import ValidationError
from .grasp import GraspObject, grit_to_roughness
from .world import ObstacleRect

# Stock navigation course: 2.0 + 1.5 + 1.5 + 1.5 + 1.0 + 0.5 = 8.0 m one way,
# turn sequence 90/45/45/90/90 degrees. The diagonal leg keeps unit length at
# exactly 1.5 so the total stays exact.
_D = 1.5 / math.sqrt(2.0)
NAV_WAYPOINTS: tuple[tuple[float, float], ...] = (
    (0.0, 0.0),
    (2.0, 0.0),
    (2.0, 1.5),
    (2.0 + _D, 1.5 + _D),
    (3.5 + _D, 1.5 + _D),
    (3.5 + _D, 2.5 + _D),
    (3.0 + _D, 2.5 + _D),
)

# Flanking boxes, all at least 0.45 m from the course polyline so the
# forward ultrasonic never trips during clean cornering.
NAV_OBSTACLES: tuple[ObstacleRect, ...] = (
    ObstacleRect(0.5, -1.0, 1.5, -0.45),
    ObstacleRect(2.45, 0.2, 3.2, 0.9),
    ObstacleRect(3.1, 3.3, 3.55, 3.8),
)

GRIT_CLASSES: tuple[int | None, ...] = (None, 1200, 120)  # smooth, fine, coarse


def grit_label(grit: int | None) -> str:
    return "smooth" if grit is None else f"{grit}-grit"


def object_catalog() -> dict[str, GraspObject]:
    """Stock pick-and-place objects for the transfer bench."""
    return {
        "earphones": GraspObject(
            name="earphones", mass_kg=0.050, width_m=0.050,
            roughness_ra_um=grit_to_roughness(None), fragility_n=4.0,
        ),
        "watch": GraspObject(
            name="watch", mass_kg=0.150, width_m=0.040,
            roughness_ra_um=grit_to_roughness(None), fragility_n=10.0,
        ),
        "water_cup": GraspObject(
            name="water_cup", mass_kg=0.250, width_m=0.070,
            roughness_ra_um=grit_to_roughness(None), fragility_n=12.0,
            has_liquid=True, fill_fraction=0.9,
        ),
    }


def with_surface(obj: GraspObject, grit: int | None) -> GraspObject:
    """The same object wrapped in sandpaper of the given grit."""
    return GraspObject(
        name=obj.name, mass_kg=obj.mass_kg, width_m=obj.width_m,
        roughness_ra_um=grit_to_roughness(grit), fragility_n=obj.fragility_n,
        has_liquid=obj.has_liquid, fill_fraction=obj.fill_fraction,
    )


def transfer_combos() -> list[tuple[str, int | None]]:
    """Object x surface grid for the transfer experiment (9 combos)."""
    return [(name, grit) for name in sorted(object_catalog()) for grit in GRIT_CLASSES]


@dataclass(frozen=True)
class Scenario:
    name: str = "default"
    seed: int = 0
    obstacles: tuple[ObstacleRect, ...] = ()
    waypoints: tuple[tuple[float, float], ...] = ()
    objects: dict[str, GraspObject] = field(default_factory=dict)
    stations: dict[str, tuple[float, float]] = field(default_factory=dict)

    def __post_init__(self):
        for i, (a, b) in enumerate(zip(self.waypoints, self.waypoints[1:])):
            if a == b:
                raise ValidationError(f"waypoints {i} and {i + 1} coincide")
        for name in self.stations:
            if name not in self.objects:
                raise ValidationError(f"station references unknown object '{name}'")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "seed": self.seed,
            "obstacles": [[r.x0, r.y0, r.x1, r.y1] for r in self.obstacles],
            "waypoints": [list(wp) for wp in self.waypoints],
            "objects": [
                {
                    "name": o.name,
                    "mass_kg": o.mass_kg,
                    "width_m": o.width_m,
                    "roughness_ra_um": o.roughness_ra_um,
                    "fragility_n": o.fragility_n,
                    "has_liquid": o.has_liquid,
                    "fill_fraction": o.fill_fraction,
                    **({"at": list(self.stations[o.name])} if o.name in self.stations else {}),
                }
                for o in self.objects.values()
            ],
        }

    @staticmethod
    def from_dict(raw: dict) -> "Scenario":
        objects: dict[str, GraspObject] = {}
        stations: dict[str, tuple[float, float]] = {}
        for entry in raw.get("objects", []):
            obj = GraspObject(
                name=entry["name"],
                mass_kg=entry["mass_kg"],
                width_m=entry["width_m"],
                roughness_ra_um=entry["roughness_ra_um"],
                fragility_n=entry["fragility_n"],
                has_liquid=entry.get("has_liquid", False),
                fill_fraction=entry.get("fill_fraction", 0.0),
            )
            objects[obj.name] = obj
            if "at" in entry:
                stations[obj.name] = (float(entry["at"][0]), float(entry["at"][1]))
        return Scenario(
            name=raw.get("name", "default"),
            seed=raw.get("seed", 0),
            obstacles=tuple(ObstacleRect(*r) for r in raw.get("obstacles", [])),
            waypoints=tuple((float(x), float(y)) for x, y in raw.get("waypoints", [])),
            objects=objects,
            stations=stations,
        )


def navigation_scenario(seed: int = 0) -> Scenario:
    return Scenario(name="navigation", seed=seed, obstacles=NAV_OBSTACLES, waypoints=NAV_WAYPOINTS)


# Transfer bench geometry: drive up to the pickup station, carry the object
# through one 90 degree corner, release at the far end of the L.
TRANSFER_WAYPOINTS: tuple[tuple[float, float], ...] = ((0.0, 0.0), (2.1, 0.0), (2.1, 1.5))
TRANSFER_PICKUP: tuple[float, float] = (0.70, 0.0)


def transfer_scenario(obj_name: str, grit: int | None = None, seed: int = 0) -> Scenario:
    catalog = object_catalog()
    if obj_name not in catalog:
        raise ValidationError(f"unknown object '{obj_name}' (have {sorted(catalog)})")
    obj = with_surface(catalog[obj_name], grit)
    return Scenario(
        name=f"transfer-{obj_name}-{grit_label(grit)}",
        seed=seed,
        waypoints=TRANSFER_WAYPOINTS,
        objects={obj.name: obj},
        stations={obj.name: TRANSFER_PICKUP},
    )


def _require(mapping: dict, key: str, ctx: str):
    if key not in mapping:
        raise ValidationError(f"{ctx}: missing required key '{key}'")
    return mapping[key]


def load_scenario(path: str | Path) -> Scenario:
    """Parse and validate a scenario YAML file."""
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ValidationError(f"{path}: not valid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ValidationError(f"{path}: scenario must be a mapping")

    name = raw.get("name", path.stem)
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        raise ValidationError(f"{path}: seed must be a non-negative integer")

    obstacles = []
    for i, rect in enumerate(raw.get("obstacles", [])):
        if not (isinstance(rect, (list, tuple)) and len(rect) == 4):
            raise ValidationError(f"{path}: obstacles[{i}] must be [x0, y0, x1, y1]")
        try:
            obstacles.append(ObstacleRect(*(float(v) for v in rect)))
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"{path}: obstacles[{i}]: {exc}") from exc

    waypoints = []
    for i, wp in enumerate(raw.get("waypoints", [])):
        if not (isinstance(wp, (list, tuple)) and len(wp) == 2):
            raise ValidationError(f"{path}: waypoints[{i}] must be [x, y]")
        x, y = (float(v) for v in wp)
        if not (math.isfinite(x) and math.isfinite(y)):
            raise ValidationError(f"{path}: waypoints[{i}] must be finite")
        waypoints.append((x, y))

    objects: dict[str, GraspObject] = {}
    stations: dict[str, tuple[float, float]] = {}
    for i, entry in enumerate(raw.get("objects", [])):
        if not isinstance(entry, dict):
            raise ValidationError(f"{path}: objects[{i}] must be a mapping")
        ctx = f"{path}: objects[{i}]"
        obj_name = str(_require(entry, "name", ctx))
        if "roughness_ra_um" in entry:
            ra = float(entry["roughness_ra_um"])
        else:
            grit = entry.get("grit")
            ra = grit_to_roughness(None if grit is None else int(grit))
        try:
            objects[obj_name] = GraspObject(
                name=obj_name,
                mass_kg=float(_require(entry, "mass_kg", ctx)),
                width_m=float(_require(entry, "width_m", ctx)),
                roughness_ra_um=ra,
                fragility_n=float(_require(entry, "fragility_n", ctx)),
                has_liquid=bool(entry.get("has_liquid", False)),
                fill_fraction=float(entry.get("fill_fraction", 0.0)),
            )
        except ValidationError as exc:
            raise ValidationError(f"{ctx}: {exc}") from exc
        if "at" in entry:
            at = entry["at"]
            if not (isinstance(at, (list, tuple)) and len(at) == 2):
                raise ValidationError(f"{ctx}: 'at' must be [x, y]")
            stations[obj_name] = (float(at[0]), float(at[1]))

    return Scenario(
        name=str(name), seed=seed, obstacles=tuple(obstacles),
        waypoints=tuple(waypoints), objects=objects, stations=stations,
    )
