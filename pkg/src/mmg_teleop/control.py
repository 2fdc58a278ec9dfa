"""Wearable-side control: mode FSM, tilt mapping, feedback coding, live vote.

The operator interface is sparse on purpose: one button switches between the
three modes, wrist tilt drives the base while in MOVEMENT, and muscle
gestures set grip force while in GRASP. Haptic feedback squeezes grip state
into eight vibration indices (six force bins plus slip and over-force
warnings).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .signals import detect_peaks, normalize, segment_windows
from .classifier.checkpoint import Checkpoint
from .classifier.network import forward, softmax


class Mode(str, enum.Enum):
    IDLE = "IDLE"
    MOVEMENT = "MOVEMENT"
    GRASP = "GRASP"


@dataclass(frozen=True)
class ControlParams:
    hold_ms: int = 3000
    double_gap_ms: int = 400
    dead_zone_deg: float = 5.0
    saturation_deg: float = 35.0
    v_max: float = 0.5
    omega_max: float = 1.0
    f_max_n: float = 12.0
    force_bins: int = 6
    vote_window: int = 3
    vote_quorum: int = 2
    gate_prominence: float = 40.0
    gate_separation_s: float = 0.05
    # commanded grip force per classified level (1 strong .. 3 light)
    level_force_n: tuple[float, float, float] = (9.0, 6.0, 3.0)

    def __post_init__(self):
        if not 0 < self.dead_zone_deg < self.saturation_deg:
            raise ValidationError("need 0 < dead zone < saturation")
        if self.vote_quorum < 1 or self.vote_quorum > self.vote_window:
            raise ValidationError("vote_quorum must be in [1, vote_window]")
        if self.f_max_n <= 0 or self.force_bins < 1:
            raise ValidationError("f_max_n and force_bins must be positive")


@dataclass(frozen=True)
class ButtonEvent:
    kind: str  # "press" | "release"
    t_ms: float


@dataclass(frozen=True)
class TiltReading:
    pitch_deg: float
    roll_deg: float
    t_ms: float


@dataclass(frozen=True)
class VelocityCommand:
    vx: float
    vy: float
    omega: float
    t_ms: float


class ModeFsm:
    """Button-pattern mode switch.

    hold >= hold_ms selects MOVEMENT; two sub-hold presses whose gap (second
    press minus first release) is <= double_gap_ms select GRASP. Both are
    recognized at the release edge. Anything else leaves the mode unchanged,
    and malformed edges (press while pressed, release while idle) are
    ignored, so arbitrary event streams cannot wedge the FSM.
    """

    def __init__(self, params: ControlParams | None = None, t0_ms: float = 0.0):
        self.params = params or ControlParams()
        self.mode = Mode.IDLE
        self._last_t = t0_ms
        self._pressed_at: float | None = None
        self._pending_release: float | None = None

    def process(self, event: ButtonEvent) -> Mode:
        if event.kind not in ("press", "release"):
            raise ValidationError(f"unknown button event kind {event.kind!r}")
        if event.t_ms < self._last_t:
            raise ValidationError("button events must have non-decreasing timestamps")
        self._last_t = event.t_ms
        if event.kind == "press":
            if self._pressed_at is None:
                self._pressed_at = event.t_ms
            return self.mode
        if self._pressed_at is None:
            return self.mode  # stray release
        held = event.t_ms - self._pressed_at
        pressed_at = self._pressed_at
        self._pressed_at = None
        if held >= self.params.hold_ms:
            self.mode = Mode.MOVEMENT
            self._pending_release = None
        else:
            if (
                self._pending_release is not None
                and pressed_at - self._pending_release <= self.params.double_gap_ms
            ):
                self.mode = Mode.GRASP
                self._pending_release = None
            else:
                self._pending_release = event.t_ms
        return self.mode


def _axis_fraction(angle_deg: float, params: ControlParams) -> float:
    mag = abs(angle_deg)
    if mag <= params.dead_zone_deg:
        return 0.0
    span = params.saturation_deg - params.dead_zone_deg
    return math.copysign(min((mag - params.dead_zone_deg) / span, 1.0), angle_deg)


def tilt_to_velocity(tilt: TiltReading, mode: Mode, params: ControlParams) -> VelocityCommand:
    """Map wrist tilt to a base velocity command.

    Pitch drives forward speed, roll drives rotation; there is no lateral
    channel. Outside MOVEMENT the command is zero regardless of tilt. The
    mapping is odd-symmetric with a +-dead_zone_deg dead band and saturation
    at saturation_deg.
    """
    if not math.isfinite(tilt.pitch_deg) or not math.isfinite(tilt.roll_deg):
        raise ValidationError("tilt angles must be finite")
    if mode is not Mode.MOVEMENT:
        return VelocityCommand(0.0, 0.0, 0.0, tilt.t_ms)
    vx = params.v_max * _axis_fraction(tilt.pitch_deg, params)
    omega = params.omega_max * _axis_fraction(tilt.roll_deg, params)
    return VelocityCommand(vx, 0.0, omega, tilt.t_ms)


def tilt_for_velocity(vx: float, omega: float, params: ControlParams) -> tuple[float, float]:
    """Inverse of tilt_to_velocity on each axis (used by scripted operators)."""

    def inv(value: float, limit: float) -> float:
        if value == 0.0:
            return 0.0
        frac = min(abs(value) / limit, 1.0)
        span = params.saturation_deg - params.dead_zone_deg
        return math.copysign(params.dead_zone_deg + frac * span, value)

    return inv(vx, params.v_max), inv(omega, params.omega_max)


# Feedback indices: 1..force_bins encode the applied force bin, then two
# warning codes. Warnings outrank bins; over-force outranks slip.
SLIP_INDEX = 7
OVER_FORCE_INDEX = 8


def force_to_feedback(
    force_n: float,
    params: ControlParams,
    slip: bool = False,
    over_force: bool = False,
) -> int:
    if not math.isfinite(force_n) or force_n < 0:
        raise ValidationError("force must be finite and >= 0")
    if over_force:
        return OVER_FORCE_INDEX
    if slip:
        return SLIP_INDEX
    bin_width = params.f_max_n / params.force_bins
    return int(min(params.force_bins, max(1, math.ceil(force_n / bin_width))))


def grip_adjust(
    current_force_n: float,
    required_force_n: float,
    params: ControlParams,
    slip: bool,
) -> int:
    """Suggested grip change in whole bins: +1, -1 or 0.

    Slip always asks for more force; a surplus of more than one bin asks for
    less; otherwise hold.
    """
    if current_force_n < 0 or required_force_n < 0:
        raise ValidationError("forces must be >= 0")
    if slip:
        return 1
    bin_width = params.f_max_n / params.force_bins
    if current_force_n > required_force_n + bin_width:
        return -1
    return 0


@dataclass(frozen=True)
class GripCommand:
    t_ms: float
    gesture: str
    level: int
    label: str


@dataclass(frozen=True)
class WindowVote:
    t_ms: float
    label: str | None  # None when the activity gate rejected the window


@dataclass
class CommandTrace:
    windows: list[WindowVote] = field(default_factory=list)
    commands: list[GripCommand] = field(default_factory=list)


def majority_label(recent: list[str], quorum: int) -> str | None:
    """Label holding at least `quorum` of the votes, or None.

    With quorum > len(recent)/2 the winner is unique by counting; a tie
    (e.g. three distinct labels) yields None and the vote slides on.
    """
    counts: dict[str, int] = {}
    for lab in recent:
        counts[lab] = counts.get(lab, 0) + 1
    winner, votes = max(counts.items(), key=lambda kv: kv[1]) if counts else (None, 0)
    return winner if votes >= quorum else None


def classify_and_command(
    samples: np.ndarray,
    sample_rate_hz: float,
    ckpt: Checkpoint | None,
    params: ControlParams,
    window_s: float = 1.0,
    overlap: float = 0.5,
    t0_ms: float = 0.0,
) -> CommandTrace:
    """Segment a live stream, classify gated windows, vote, emit commands.

    Windows with no detected activity (no peak of at least gate_prominence
    sensor units on any channel) are excluded from the vote; the six classes
    all describe gestures, so an idle window has no honest label. A command
    is emitted when at least vote_quorum of the last vote_window gated labels
    agree and the winning label differs from the previous command. Without a
    checkpoint the function fails closed: windows are recorded, nothing is
    commanded.
    """
    trace = CommandTrace()
    windows = segment_windows(samples, sample_rate_hz, window_s=window_s, overlap=overlap)
    sep = max(1, int(round(params.gate_separation_s * sample_rate_hz)))
    recent: list[str] = []
    last_label: str | None = None
    for win in windows:
        t_end_ms = t0_ms + (win.t0_us / 1000.0) + window_s * 1000.0
        active = any(
            detect_peaks(win.samples[:, ch], params.gate_prominence, sep).size > 0
            for ch in range(win.samples.shape[1])
        )
        if not active or ckpt is None:
            trace.windows.append(WindowVote(t_end_ms, None))
            continue
        normed = normalize(win.samples, ckpt.norm_stats)
        probs = softmax(forward(ckpt.params, ckpt.config, normed[None]))
        label = ckpt.label_order[int(probs.argmax())]
        trace.windows.append(WindowVote(t_end_ms, label))
        recent.append(label)
        if len(recent) > params.vote_window:
            recent.pop(0)
        winner = majority_label(recent, params.vote_quorum)
        if winner is not None and winner != last_label:
            gesture, lvl = winner.split("_L")
            trace.commands.append(GripCommand(t_end_ms, gesture, int(lvl), winner))
            last_label = winner
    return trace


def level_force(level: int, params: ControlParams) -> float:
    if level not in (1, 2, 3):
        raise ValidationError("grip level must be 1, 2 or 3")
    return params.level_force_n[level - 1]
