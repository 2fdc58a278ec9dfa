"""Simulation session: wearable-side control wired to the robot over lossy links.

A SimSession owns one world, one gripper, two simulated radio links and the
wearable's mode machine, all advanced on a fixed 10 ms clock. Callers feed
operator-level inputs (tilt, button edges, grip intents, emergency stop)
between steps; the session translates them into wire frames, applies whatever
reaches the robot, and appends line-delimited records from which every metric
is recomputable. Feeding the logged inputs into a fresh session reproduces
the record stream exactly, which is what makes interactive logs replayable.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import replace
from pathlib import Path

import numpy as np

from ..control import (
    ButtonEvent,
    Mode,
    ModeFsm,
    TiltReading,
    force_to_feedback,
    level_force,
    tilt_to_velocity,
)
from ..errors import RejectedActionError, ValidationError
from ..link import Frame, FrameKind, SimulatedLink
from ..sim import (
    Manipulator,
    ReleaseStrategy,
    Scenario,
    TransportHazard,
    TransportMonitor,
    ultrasonic_clearance,
)
from ..sim.world import WorldState, step as world_step
from .config import AppConfig, config_from_dict

GRIPPER_APERTURE_M = 0.10
# holding above this fraction of the crush force trips the over-force warning
OVER_FORCE_FRACTION = 0.85

_VELOCITY_FMT = "<fff"
_GRIP_FMT = "<BBb"
_BYTE_FMT = "<B"

_GRIP_CODES = {"grasp": 1, "release": 2, "adjust": 3}
_STRATEGIES = {1: ReleaseStrategy.GRADUAL, 2: ReleaseStrategy.STANDARD, 3: ReleaseStrategy.LIGHT}

LOG_VERSION = 1


def _dump(record: dict) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


class SimSession:
    """One teleoperation episode over a scenario.

    Inputs queue up between steps and take effect on the next step(); the
    session is synchronous and single-owner, so callers never race the world.
    """

    def __init__(
        self,
        scenario: Scenario,
        config: AppConfig | None = None,
        log_path: str | Path | None = None,
    ):
        self.scenario = scenario
        self.config = config or AppConfig()
        self.dt_ms = self.config.serve.dt_ms
        self.dt_s = self.dt_ms / 1000.0
        self.step_index = 0

        up_seed, down_seed = np.random.SeedSequence(scenario.seed).generate_state(2)
        self.uplink = SimulatedLink(replace(self.config.link, seed=int(up_seed)))
        self.downlink = SimulatedLink(replace(self.config.link, seed=int(down_seed)))
        self._up_seq = 0
        self._down_seq = 0

        self.fsm = ModeFsm(self.config.control, t0_ms=0.0)
        self.state = WorldState(obstacles=scenario.obstacles, params=self.config.robot)
        self.manipulator = Manipulator()
        self.monitor: TransportMonitor | None = None
        self._object_pos = dict(scenario.stations)
        self._damaged: set[str] = set()

        self._pending: list[dict] = []
        self._cmd = (0.0, 0.0, 0.0)
        self._estop = False
        self._last_feedback: int | None = None

        self.records: list[dict] = []
        self._fh = open(log_path, "w") if log_path is not None else None
        self._closed = False
        self._record(
            {
                "type": "header",
                "version": LOG_VERSION,
                "t_ms": 0.0,
                "scenario": scenario.to_dict(),
                "config": self.config.to_dict(),
            }
        )
        self._emit_telemetry(0.0)

    # -- properties ----------------------------------------------------------

    @property
    def mode(self) -> Mode:
        return self.fsm.mode

    @property
    def t_ms(self) -> float:
        return self.step_index * self.dt_ms

    # -- input side (the wearable) -------------------------------------------

    def feed_tilt(self, pitch_deg: float, roll_deg: float) -> None:
        if not (math.isfinite(pitch_deg) and math.isfinite(roll_deg)):
            raise ValidationError("tilt angles must be finite")
        self._queue({"type": "tilt", "pitch_deg": float(pitch_deg), "roll_deg": float(roll_deg)})

    def feed_button(self, kind: str) -> None:
        if kind not in ("press", "release"):
            raise ValidationError(f"unknown button event kind {kind!r}")
        self._queue({"type": "button", "kind": kind})

    def feed_grip(self, action: str, level: int = 0, strategy: int = 0, delta: int = 0) -> None:
        if action not in _GRIP_CODES:
            raise ValidationError(f"unknown grip action {action!r}")
        if action == "grasp" and level not in (1, 2, 3):
            raise ValidationError("grasp needs level in {1, 2, 3}")
        if action == "release" and strategy not in (1, 2, 3):
            raise ValidationError("release needs strategy in {1, 2, 3}")
        if action == "adjust" and delta not in (-1, 1):
            raise ValidationError("adjust needs delta in {-1, +1}")
        self._queue(
            {
                "type": "grip",
                "action": action,
                "level": int(level),
                "strategy": int(strategy),
                "delta": int(delta),
            }
        )

    def feed_estop(self, engage: bool = True) -> None:
        self._queue({"type": "estop", "engage": bool(engage)})

    def _queue(self, payload: dict) -> None:
        if self._closed:
            raise ValidationError("session is closed")
        self._pending.append(payload)
        self._record(
            {"type": "input", "step": self.step_index, "t_ms": self.t_ms, "input": payload}
        )

    # -- stepping -------------------------------------------------------------

    def step(self) -> list[dict]:
        """Advance one control period; returns the records emitted this step."""
        if self._closed:
            raise ValidationError("session is closed")
        mark = len(self.records)
        t_now = self.t_ms
        t_end = t_now + self.dt_ms

        for payload in self._pending:
            self._apply_input(payload, t_now)
        self._pending.clear()

        for _, frame in self.uplink.receive(t_end):
            self._apply_frame(frame, t_end)

        if self._estop:
            # hard safety latch: velocities die this step, bypassing slew
            self.state = replace(self.state, vx=0.0, vy=0.0, omega=0.0)
            cmd = (0.0, 0.0, 0.0)
        else:
            cmd = self._cmd

        prev = self.state
        self.state = world_step(self.state, cmd[0], cmd[1], cmd[2], self.dt_s)
        if self.state.collisions > prev.collisions:
            self._event(t_end, "collision", count=self.state.collisions)

        if self.manipulator.held is not None:
            self._update_transport(prev, t_end)
        else:
            self._last_feedback = None

        self._send_feedback_edge(t_end)
        for _, frame in self.downlink.receive(t_end):
            idx = struct.unpack(_BYTE_FMT, frame.payload)[0]
            self._event(t_end, "feedback", index=int(idx))

        self.step_index += 1
        if self.step_index % self.config.serve.telemetry_every == 0:
            self._emit_telemetry(t_end)
        return self.records[mark:]

    def run(self, n_steps: int) -> list[dict]:
        mark = len(self.records)
        for _ in range(n_steps):
            self.step()
        return self.records[mark:]

    def close(self) -> None:
        if self._closed:
            return
        self._record({"type": "end", "t_ms": self.t_ms, "steps": self.step_index})
        self._closed = True
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def __enter__(self) -> "SimSession":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- wearable-side input application --------------------------------------

    def _apply_input(self, payload: dict, t_ms: float) -> None:
        kind = payload["type"]
        if kind == "tilt":
            if self.fsm.mode is Mode.MOVEMENT:
                cmd = tilt_to_velocity(
                    TiltReading(payload["pitch_deg"], payload["roll_deg"], t_ms),
                    self.fsm.mode,
                    self.config.control,
                )
                self._send_velocity(cmd.vx, cmd.vy, cmd.omega, t_ms)
        elif kind == "button":
            before = self.fsm.mode
            after = self.fsm.process(ButtonEvent(payload["kind"], t_ms))
            if after is not before:
                self._event(t_ms, "mode", mode=after.value)
                if before is Mode.MOVEMENT:
                    self._send_velocity(0.0, 0.0, 0.0, t_ms)
        elif kind == "grip":
            if self.fsm.mode is Mode.GRASP:
                arg = payload["level"] if payload["action"] == "grasp" else payload["strategy"]
                buf = struct.pack(
                    _GRIP_FMT, _GRIP_CODES[payload["action"]], arg, payload["delta"]
                )
                self._send_uplink(FrameKind.GRIP, buf, t_ms)
            else:
                self._event(
                    t_ms, "grip_ignored", action=payload["action"], mode=self.fsm.mode.value
                )
        elif kind == "estop":
            engage = payload["engage"]
            self._estop = engage
            if engage:
                self._cmd = (0.0, 0.0, 0.0)
            self._event(t_ms, "estop", engaged=engage)
            self._send_uplink(FrameKind.ESTOP, struct.pack(_BYTE_FMT, int(engage)), t_ms)
        else:
            raise ValidationError(f"unknown input type {kind!r}")

    def _send_velocity(self, vx: float, vy: float, omega: float, t_ms: float) -> None:
        self._send_uplink(FrameKind.VELOCITY, struct.pack(_VELOCITY_FMT, vx, vy, omega), t_ms)

    def _send_uplink(self, kind: FrameKind, payload: bytes, t_ms: float) -> None:
        self.uplink.send(Frame(kind=kind, seq=self._up_seq, payload=payload, t_ms=t_ms), t_ms)
        self._up_seq += 1

    # -- robot-side frame application ------------------------------------------

    def _apply_frame(self, frame: Frame, t_ms: float) -> None:
        if frame.kind is FrameKind.VELOCITY:
            if not self._estop:
                vx, vy, omega = struct.unpack(_VELOCITY_FMT, frame.payload)
                self._cmd = (float(vx), float(vy), float(omega))
        elif frame.kind is FrameKind.GRIP:
            action, arg, delta = struct.unpack(_GRIP_FMT, frame.payload)
            self._apply_grip(int(action), int(arg), int(delta), t_ms)
        elif frame.kind is FrameKind.ESTOP:
            # mirror of the out-of-band latch; arrival is idempotent
            engaged = bool(struct.unpack(_BYTE_FMT, frame.payload)[0])
            if engaged:
                self._cmd = (0.0, 0.0, 0.0)

    def _apply_grip(self, action: int, arg: int, delta: int, t_ms: float) -> None:
        try:
            if action == _GRIP_CODES["grasp"]:
                self._do_grasp(arg, t_ms)
            elif action == _GRIP_CODES["release"]:
                self._do_release(arg, t_ms)
            elif action == _GRIP_CODES["adjust"]:
                bin_n = self.config.control.f_max_n / self.config.control.force_bins
                force = self.manipulator.adjust_force(delta * bin_n)
                self._event(t_ms, "adjust", delta_bins=delta, force_n=force)
        except RejectedActionError as exc:
            names = {v: k for k, v in _GRIP_CODES.items()}
            self._event(t_ms, "rejected", action=names.get(action, str(action)), reason=str(exc))

    def _do_grasp(self, level: int, t_ms: float) -> None:
        target = self._nearest_object()
        if target is None:
            raise RejectedActionError("no object to grasp")
        if target in self._damaged:
            raise RejectedActionError(f"{target} is damaged")
        obj = self.scenario.objects[target]
        px, py = self._object_pos[target]
        dist = math.hypot(px - self.state.pose.x, py - self.state.pose.y)
        misalign = max(0.0, dist - self.config.robot.radius_m)
        force = level_force(level, self.config.control)
        outcome = self.manipulator.grasp(obj, force, GRIPPER_APERTURE_M, misalign)
        self._event(
            t_ms,
            "grasp",
            object=target,
            level=level,
            force_n=force,
            misalign_m=misalign,
            outcome=outcome.value,
        )
        if self.manipulator.held is not None:
            del self._object_pos[target]
            self.monitor = TransportMonitor(obj)
        elif outcome.value == "DAMAGED":
            self._damaged.add(target)

    def _do_release(self, strategy_idx: int, t_ms: float) -> None:
        if strategy_idx not in _STRATEGIES:
            raise RejectedActionError(f"unknown release strategy {strategy_idx}")
        held = self.manipulator.held
        speed = math.hypot(self.state.vx, self.state.vy)
        outcome = self.manipulator.release(_STRATEGIES[strategy_idx], speed)
        x, y = self.state.pose.x, self.state.pose.y
        self._object_pos[held.name] = (x, y)
        self.monitor = None
        self._event(
            t_ms,
            "release",
            object=held.name,
            strategy=_STRATEGIES[strategy_idx].value,
            outcome=outcome.value,
            x=x,
            y=y,
        )

    def _nearest_object(self) -> str | None:
        if not self._object_pos:
            return None
        x, y = self.state.pose.x, self.state.pose.y
        return min(
            self._object_pos,
            key=lambda n: math.hypot(self._object_pos[n][0] - x, self._object_pos[n][1] - y),
        )

    # -- transport physics and feedback ----------------------------------------

    def _update_transport(self, prev: WorldState, t_ms: float) -> None:
        dt = self.dt_s
        # body-frame acceleration with the rotational coupling terms
        ax = (self.state.vx - prev.vx) / dt - self.state.omega * self.state.vy
        ay = (self.state.vy - prev.vy) / dt + self.state.omega * self.state.vx
        accel = math.hypot(ax, ay)
        alpha = abs(self.state.omega - prev.omega) / dt
        clearance = self._body_clearance()
        hazards = self.monitor.update(
            dt, self.manipulator.grip_force_n, accel, alpha, clearance
        )
        name = self.manipulator.held.name
        for hz in hazards:
            self._event(t_ms, "hazard", hazard=hz.value, object=name)
        if TransportHazard.DROP in hazards:
            self.manipulator.held = None
            self.manipulator.grip_force_n = 0.0
            self._object_pos[name] = (self.state.pose.x, self.state.pose.y)
            self.monitor = None

    def _body_clearance(self) -> float:
        best = math.inf
        x, y = self.state.pose.x, self.state.pose.y
        for rect in self.scenario.obstacles:
            dx = max(rect.x0 - x, 0.0, x - rect.x1)
            dy = max(rect.y0 - y, 0.0, y - rect.y1)
            best = min(best, math.hypot(dx, dy) - self.config.robot.radius_m)
        return max(best, 0.0)

    def _send_feedback_edge(self, t_ms: float) -> None:
        held = self.manipulator.held
        if held is None:
            return
        force = self.manipulator.grip_force_n
        idx = force_to_feedback(
            force,
            self.config.control,
            slip=self.manipulator.slipping,
            over_force=force > OVER_FORCE_FRACTION * held.fragility_n,
        )
        if idx != self._last_feedback:
            self._last_feedback = idx
            frame = Frame(
                kind=FrameKind.FEEDBACK,
                seq=self._down_seq,
                payload=struct.pack(_BYTE_FMT, idx),
                t_ms=t_ms,
            )
            self.downlink.send(frame, t_ms)
            self._down_seq += 1

    # -- records -----------------------------------------------------------------

    def _event(self, t_ms: float, kind: str, **extra) -> None:
        self._record({"type": "event", "t_ms": t_ms, "kind": kind, **extra})

    def _emit_telemetry(self, t_ms: float) -> None:
        held = self.manipulator.held
        self._record(
            {
                "type": "telemetry",
                "t_ms": t_ms,
                "x": self.state.pose.x,
                "y": self.state.pose.y,
                "theta": self.state.pose.theta,
                "vx": self.state.vx,
                "vy": self.state.vy,
                "omega": self.state.omega,
                "mode": self.fsm.mode.value,
                "estop": self._estop,
                "proximity_stop": self.state.estop_active,
                "collisions": self.state.collisions,
                "held": held.name if held is not None else None,
                "force_n": self.manipulator.grip_force_n,
                "feedback": self._last_feedback,
                "clearance_m": ultrasonic_clearance(self.state),
            }
        )

    def _record(self, record: dict) -> None:
        self.records.append(record)
        if self._fh is not None:
            self._fh.write(_dump(record) + "\n")


# -- record-stream helpers (pure functions; metrics live on these) -----------


def events(records: list[dict], kind: str | None = None) -> list[dict]:
    return [
        r for r in records if r["type"] == "event" and (kind is None or r["kind"] == kind)
    ]


def telemetry(records: list[dict]) -> list[dict]:
    return [r for r in records if r["type"] == "telemetry"]


def executed_path(records: list[dict]) -> np.ndarray:
    """(N, 2) array of telemetry positions, in record order."""
    tel = telemetry(records)
    if not tel:
        return np.zeros((0, 2))
    return np.array([[r["x"], r["y"]] for r in tel])


def session_metrics(records: list[dict]) -> dict:
    """Generic per-session numbers; experiments layer their own on top."""
    tel = telemetry(records)
    end = [r for r in records if r["type"] == "end"]
    return {
        "duration_s": (end[-1]["t_ms"] if end else tel[-1]["t_ms"]) / 1000.0,
        "steps": end[-1]["steps"] if end else None,
        "collisions": tel[-1]["collisions"] if tel else 0,
        "grasps": [(e["object"], e["outcome"]) for e in events(records, "grasp")],
        "releases": [(e["object"], e["outcome"]) for e in events(records, "release")],
        "hazards": [e["hazard"] for e in events(records, "hazard")],
        "rejected": len(events(records, "rejected")),
        "estops": len(events(records, "estop")),
    }


def load_log(path: str | Path) -> list[dict]:
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise ValidationError(f"{path}: empty log")
    records = [json.loads(line) for line in lines]
    if records[0].get("type") != "header":
        raise ValidationError(f"{path}: first record must be the header")
    return records


def replay_records(records: list[dict]) -> list[dict]:
    """Re-run the logged inputs through a fresh session.

    Determinism of the whole stack (links, world, gripper) makes the output
    records identical to the originals; callers can assert that directly.
    """
    header = records[0]
    if header.get("type") != "header":
        raise ValidationError("first record must be the header")
    ends = [r for r in records if r["type"] == "end"]
    if not ends:
        raise ValidationError("log has no end record; session was not closed")
    n_steps = ends[-1]["steps"]

    config = config_from_dict(header["config"])
    scenario = Scenario.from_dict(header["scenario"])
    by_step: dict[int, list[dict]] = {}
    for r in records:
        if r["type"] == "input":
            by_step.setdefault(r["step"], []).append(r["input"])

    session = SimSession(scenario, config)
    feeders = {
        "tilt": lambda p: session.feed_tilt(p["pitch_deg"], p["roll_deg"]),
        "button": lambda p: session.feed_button(p["kind"]),
        "grip": lambda p: session.feed_grip(p["action"], p["level"], p["strategy"], p["delta"]),
        "estop": lambda p: session.feed_estop(p["engage"]),
    }
    for i in range(n_steps):
        for payload in by_step.get(i, ()):
            feeders[payload["type"]](payload)
        session.step()
    session.close()
    return session.records


def replay_log(path: str | Path) -> tuple[list[dict], list[dict]]:
    """(original records, replayed records) for the log at path."""
    original = load_log(path)
    return original, replay_records(original)
