"""Application configuration: every tunable constant, YAML-overridable.

The default AppConfig reproduces the declared constants used throughout the
package. A config file supplies partial overrides per section; unknown keys
are rejected so typos fail loudly instead of silently running defaults.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from ..classifier.network import ModelConfig
from ..classifier.train import TrainSpec
from ..control import ControlParams
from ..errors import ValidationError
from ..link import LinkParams
from ..sim.world import RobotParams
from ..synth import DatasetSpec


@dataclass(frozen=True)
class OperatorParams:
    """Scripted stand-in for the paper's human operators."""

    reaction_delay_ms: tuple[float, float] = (200.0, 400.0)
    tilt_noise_deg: float = 1.2
    lookahead_m: float = 0.40
    cruise_mps: float = 0.5
    turn_radius_90_m: float = 0.35
    turn_radius_45_m: float = 0.55
    # grip-level misjudgment: probability of choosing one / two levels
    # lighter than the object needs (the water-cup failure mode)
    misjudge_one_p: float = 0.14
    misjudge_two_p: float = 0.05
    grasp_misalign_sigma_m: float = 0.012
    wrong_release_p: float = 0.05
    jerky_turn_p: float = 0.08

    def __post_init__(self):
        lo, hi = self.reaction_delay_ms
        if not 0 <= lo <= hi:
            raise ValidationError("reaction_delay_ms must be an ordered non-negative pair")
        for name in ("misjudge_one_p", "misjudge_two_p", "wrong_release_p", "jerky_turn_p"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValidationError(f"{name} must be a probability")
        if self.cruise_mps <= 0 or self.lookahead_m <= 0:
            raise ValidationError("cruise_mps and lookahead_m must be positive")


@dataclass(frozen=True)
class RecognitionParams:
    trials_per_class: int = 50
    subjects: int = 5
    subject_amp_sigma: float = 0.10
    window_overlap: float = 0.5
    pre_roll_s: float = 0.5
    trial_len_s: float = 2.0

    def __post_init__(self):
        if self.trials_per_class < 1 or self.subjects < 1:
            raise ValidationError("trials_per_class and subjects must be >= 1")
        if not 0.0 <= self.window_overlap < 1.0:
            raise ValidationError("window_overlap must be in [0, 1)")


@dataclass(frozen=True)
class NavigationParams:
    trials: int = 100
    finish_tolerance_m: float = 0.20
    time_limit_s: float = 90.0

    def __post_init__(self):
        if self.trials < 1:
            raise ValidationError("trials must be >= 1")
        if self.finish_tolerance_m <= 0 or self.time_limit_s <= 0:
            raise ValidationError("finish_tolerance_m and time_limit_s must be positive")


@dataclass(frozen=True)
class TransferParams:
    trials_per_combo: int = 5
    time_limit_s: float = 40.0
    slip_feedback: bool = True

    def __post_init__(self):
        if self.trials_per_combo < 1:
            raise ValidationError("trials_per_combo must be >= 1")
        if self.time_limit_s <= 0:
            raise ValidationError("time_limit_s must be positive")


@dataclass(frozen=True)
class ServeParams:
    host: str = "127.0.0.1"
    port: int = 8765
    telemetry_every: int = 2  # send telemetry every N sim steps (2 -> 50 Hz)
    dt_ms: float = 10.0

    def __post_init__(self):
        if not 1 <= self.port <= 65535:
            raise ValidationError("port must be in [1, 65535]")
        if self.telemetry_every < 1 or self.dt_ms <= 0:
            raise ValidationError("telemetry_every >= 1 and dt_ms > 0 required")


@dataclass(frozen=True)
class AppConfig:
    seed: int = 0
    control: ControlParams = field(default_factory=ControlParams)
    link: LinkParams = field(default_factory=LinkParams)
    robot: RobotParams = field(default_factory=RobotParams)
    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainSpec = field(default_factory=TrainSpec)
    operator: OperatorParams = field(default_factory=OperatorParams)
    recognition: RecognitionParams = field(default_factory=RecognitionParams)
    navigation: NavigationParams = field(default_factory=NavigationParams)
    transfer: TransferParams = field(default_factory=TransferParams)
    serve: ServeParams = field(default_factory=ServeParams)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_SECTIONS = {
    "control": ControlParams,
    "link": LinkParams,
    "robot": RobotParams,
    "dataset": DatasetSpec,
    "model": ModelConfig,
    "train": TrainSpec,
    "operator": OperatorParams,
    "recognition": RecognitionParams,
    "navigation": NavigationParams,
    "transfer": TransferParams,
    "serve": ServeParams,
}

# tuple-valued fields arrive from YAML as lists; coerce before construction
_TUPLE_FIELDS = {
    ("control", "level_force_n"),
    ("operator", "reaction_delay_ms"),
}


def _build_section(name: str, cls, overrides: dict):
    valid = {f.name for f in dataclasses.fields(cls)}
    unknown = set(overrides) - valid
    if unknown:
        raise ValidationError(
            f"config section '{name}': unknown keys {sorted(unknown)}"
        )
    kwargs = {}
    for key, value in overrides.items():
        if (name, key) in _TUPLE_FIELDS and isinstance(value, list):
            value = tuple(value)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ValidationError(f"config section '{name}': {exc}") from exc


def config_from_dict(raw: dict) -> AppConfig:
    """Rebuild an AppConfig from a to_dict() snapshot (e.g. a log header)."""
    if not isinstance(raw, dict):
        raise ValidationError("config snapshot must be a mapping")
    unknown = set(raw) - set(_SECTIONS) - {"seed"}
    if unknown:
        raise ValidationError(f"unknown config sections {sorted(unknown)}")
    sections = {
        name: _build_section(name, cls, raw.get(name, {}))
        for name, cls in _SECTIONS.items()
    }
    return AppConfig(seed=raw.get("seed", 0), **sections)


def load_config(path: str | Path | None = None, seed: int | None = None) -> AppConfig:
    """Defaults overlaid with a YAML file, with an optional seed override."""
    raw: dict = {}
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise ValidationError(f"config file not found: {p}")
        try:
            loaded = yaml.safe_load(p.read_text())
        except yaml.YAMLError as exc:
            raise ValidationError(f"{p}: not valid YAML: {exc}") from exc
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ValidationError(f"{p}: config must be a mapping")
        raw = loaded

    unknown = set(raw) - set(_SECTIONS) - {"seed"}
    if unknown:
        raise ValidationError(f"unknown config sections {sorted(unknown)}")

    sections = {}
    for name, cls in _SECTIONS.items():
        overrides = raw.get(name, {})
        if not isinstance(overrides, dict):
            raise ValidationError(f"config section '{name}' must be a mapping")
        sections[name] = _build_section(name, cls, overrides)

    cfg_seed = raw.get("seed", 0)
    if not isinstance(cfg_seed, int) or cfg_seed < 0:
        raise ValidationError("seed must be a non-negative integer")
    if seed is not None:
        cfg_seed = seed
    return AppConfig(seed=cfg_seed, **sections)
