"""Scripted operators standing in for the paper's human subjects.

Humans are modeled as parameterized policies: they see the world state
directly (no sensing model), but act through the same wearable input surface
a person would use, with reaction delays, smoothed tilt tremor, occasional
grip-force misjudgment and the odd jerky turn. A ReferencePath turns the
scenario's waypoint polyline into a drivable course by rounding each corner
with an arc, which is what keeps round-trip times inside the observed band:
the base cannot strafe, so stop-and-rotate cornering would burn tens of
seconds of pure rotation.
"""

from __future__ import annotations

import heapq
import itertools
import math
from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

from ..control import Mode, tilt_for_velocity
from ..errors import ValidationError
from ..sim import GraspObject
from .config import AppConfig
from .session import SimSession

FF_LEAD_M = 0.06  # curvature feedforward lead; longer when carrying liquid
FF_LEAD_LIQUID_M = 0.12
ACCEL_CMD = 1.2  # m/s^2 command ramp; stays under the 2 m/s^2 slosh limit
ALPHA_CMD = 6.0  # rad/s^2 command ramp when not carrying liquid
ALPHA_CMD_LIQUID = 2.0
K_HEADING = 2.5
K_CROSS = 6.0
STOP_SPEED = 0.01  # m/s; "the robot has stopped" for phase transitions

BUTTON_TAP_MS = 80.0
BUTTON_GAP_MS = 120.0
HOLD_EXTRA_MS = 200.0
GRASP_SETTLE_MS = 900.0
ADJUST_SETTLE_MS = 500.0
JERK_PHASE_MS = 150.0  # each half of the two-phase flick

SLIP_FEEDBACK = 7
OVER_FORCE_FEEDBACK = 8


def wrap_angle(a: float) -> float:
    return math.atan2(math.sin(a), math.cos(a))


@dataclass(frozen=True)
class _Element:
    kind: str  # "line" | "arc"
    s0: float
    length: float
    # line: p0 + u * (s - s0); arc: center c, radius r, start angle a0, sign
    p0: tuple[float, float] = (0.0, 0.0)
    u: tuple[float, float] = (1.0, 0.0)
    c: tuple[float, float] = (0.0, 0.0)
    r: float = 0.0
    a0: float = 0.0
    sgn: float = 1.0
    v_limit: float = math.inf


class ReferencePath:
    """Waypoint polyline with filleted corners, parameterized by arc length.

    Corners are rounded with tangent arcs (radius picked per turn angle,
    clamped so neighbouring fillets fit the shared segment) and each arc
    carries a speed limit of corner_frac * r * omega_max so the base can
    actually hold the curvature.
    """

    def __init__(
        self,
        waypoints,
        r90: float,
        r45: float,
        cruise: float,
        omega_max: float,
        corner_frac: float = 0.9,
    ):
        if len(waypoints) < 2:
            raise ValidationError("need at least two waypoints")
        pts = [np.asarray(p, dtype=float) for p in waypoints]
        n = len(pts)
        seg_v = [pts[i + 1] - pts[i] for i in range(n - 1)]
        seg_len = [float(np.hypot(*v)) for v in seg_v]
        if min(seg_len) <= 0:
            raise ValidationError("waypoints must be distinct")
        units = [v / l for v, l in zip(seg_v, seg_len)]

        # per-corner turn angle and desired trim distance d = r tan(delta/2)
        deltas, trims = [0.0] * n, [0.0] * n
        for i in range(1, n - 1):
            dot = float(np.clip(np.dot(units[i - 1], units[i]), -1.0, 1.0))
            delta = math.acos(dot)
            deltas[i] = delta
            if delta < 1e-9:
                continue
            r = r90 if delta > 3 * math.pi / 8 else r45
            trims[i] = r * math.tan(delta / 2)
        # shrink fillets that do not fit their segments (shared budget 90%)
        for j in range(n - 1):
            need = trims[j] + (trims[j + 1] if j + 1 < n else 0.0)
            cap = 0.9 * seg_len[j]
            if need > cap > 0:
                scale = cap / need
                trims[j] *= scale
                if j + 1 < n:
                    trims[j + 1] *= scale

        elements: list[_Element] = []
        s = 0.0
        cursor = pts[0]
        for i in range(1, n - 1):
            d = trims[i]
            u_in, u_out = units[i - 1], units[i]
            t_in = pts[i] - u_in * d
            line_len = float(np.hypot(*(t_in - cursor)))
            if line_len > 1e-12:
                elements.append(
                    _Element("line", s, line_len, p0=tuple(cursor), u=tuple(u_in), v_limit=cruise)
                )
                s += line_len
            if d <= 1e-12 or deltas[i] < 1e-9:
                cursor = t_in
                continue
            sgn = math.copysign(1.0, float(np.cross(u_in, u_out)))
            r = d / math.tan(deltas[i] / 2)
            c = t_in + sgn * np.array([-u_in[1], u_in[0]]) * r
            a0 = math.atan2(t_in[1] - c[1], t_in[0] - c[0])
            arc_len = r * deltas[i]
            v_arc = min(cruise, corner_frac * r * omega_max)
            elements.append(
                _Element("arc", s, arc_len, c=tuple(c), r=r, a0=a0, sgn=sgn, v_limit=v_arc)
            )
            s += arc_len
            cursor = pts[i] + u_out * d
        tail = float(np.hypot(*(pts[-1] - cursor)))
        if tail > 1e-12:
            elements.append(
                _Element("line", s, tail, p0=tuple(cursor), u=tuple(units[-1]), v_limit=cruise)
            )
            s += tail

        self.elements = elements
        self.length = s
        self.cruise = cruise
        self._starts = [e.s0 for e in elements]

    def _element_at(self, s: float) -> _Element:
        i = bisect_right(self._starts, s) - 1
        return self.elements[max(i, 0)]

    def sample(self, s: float) -> tuple[float, float, float, float]:
        """(x, y, tangent heading, signed curvature) at arc length s."""
        s = min(max(s, 0.0), self.length)
        e = self._element_at(s)
        ds = s - e.s0
        if e.kind == "line":
            x = e.p0[0] + e.u[0] * ds
            y = e.p0[1] + e.u[1] * ds
            return x, y, math.atan2(e.u[1], e.u[0]), 0.0
        ang = e.a0 + e.sgn * ds / e.r
        x = e.c[0] + e.r * math.cos(ang)
        y = e.c[1] + e.r * math.sin(ang)
        return x, y, wrap_angle(ang + e.sgn * math.pi / 2), e.sgn / e.r

    def speed_limit(self, s: float) -> float:
        return self._element_at(min(max(s, 0.0), self.length)).v_limit

    def project(self, s_guess: float, x: float, y: float) -> tuple[float, float]:
        """Refine the arc-length estimate near s_guess; returns (s, cross_track).

        Two local Newton steps along the tangent; adequate because callers
        track s continuously and errors stay small. Cross-track is positive
        to the left of the path.
        """
        s = min(max(s_guess, 0.0), self.length)
        for _ in range(2):
            px, py, h, _ = self.sample(s)
            tx, ty = math.cos(h), math.sin(h)
            s = min(max(s + (x - px) * tx + (y - py) * ty, 0.0), self.length)
        px, py, h, _ = self.sample(s)
        e = math.cos(h) * (y - py) - math.sin(h) * (x - px)
        return s, e

    def speed_allowance(
        self, s: float, direction: int, stop_at_s: float, lookahead: float, a_brake: float
    ) -> float:
        """Fastest speed at s that can still honor limits and the stop point."""
        s = min(max(s, 0.0), self.length)
        v = self.speed_limit(s)
        dist_stop = max(0.0, (stop_at_s - s) * direction)
        v = min(v, math.sqrt(2.0 * a_brake * dist_stop))
        for e in self.elements:
            boundary = e.s0 if direction > 0 else e.s0 + e.length
            d = (boundary - s) * direction
            if 0.0 < d <= lookahead:
                v = min(v, math.sqrt(e.v_limit**2 + 2.0 * a_brake * d))
        return min(v, self.cruise)

    def polyline(self, ds: float = 0.02) -> np.ndarray:
        ss = np.arange(0.0, self.length, ds)
        pts = [self.sample(float(s))[:2] for s in ss]
        pts.append(self.sample(self.length)[:2])
        return np.asarray(pts)


class _SmoothNoise:
    """AR(1) tremor with a chosen stationary standard deviation."""

    def __init__(self, rng: np.random.Generator, sigma: float, alpha: float = 0.1):
        self._rng = rng
        self._alpha = alpha
        self._drive = sigma * math.sqrt((2.0 - alpha) / alpha) if sigma > 0 else 0.0
        self.value = 0.0

    def step(self) -> float:
        eps = self._rng.normal(0.0, self._drive) if self._drive else 0.0
        self.value += self._alpha * (eps - self.value)
        return self.value


class _ScriptedOperator:
    """Common machinery: action scheduling, mode dances, path tracking.

    Trial-level draws come from rng_plan in a fixed order so paired runs
    (e.g. the slip-feedback ablation) see identical hands; event-dependent
    draws (reaction delays, tremor) use a separate motor stream.
    """

    def __init__(self, session: SimSession, rng: np.random.Generator):
        self.session = session
        self.config = session.config
        self.ops = self.config.operator
        self.rng_plan = rng
        self.rng_motor = np.random.default_rng(int(rng.integers(2**63)))
        self.noise_p = _SmoothNoise(self.rng_motor, self.ops.tilt_noise_deg)
        self.noise_r = _SmoothNoise(self.rng_motor, self.ops.tilt_noise_deg)
        self._agenda: list[tuple[float, int, object]] = []
        self._tick = itertools.count()
        self.done = False
        self.failed: str | None = None
        self.v_cmd = 0.0
        self.w_cmd = 0.0
        self.s_est = 0.0

    # -- scheduling -------------------------------------------------------

    def at(self, t_ms: float, fn) -> None:
        heapq.heappush(self._agenda, (t_ms, next(self._tick), fn))

    def run_due(self, t_ms: float) -> None:
        while self._agenda and self._agenda[0][0] <= t_ms:
            _, _, fn = heapq.heappop(self._agenda)
            fn()

    def reaction_ms(self) -> float:
        lo, hi = self.ops.reaction_delay_ms
        return float(self.rng_motor.uniform(lo, hi))

    def double_press(self, t_ms: float) -> None:
        s = self.session
        self.at(t_ms, lambda: s.feed_button("press"))
        self.at(t_ms + BUTTON_TAP_MS, lambda: s.feed_button("release"))
        self.at(t_ms + BUTTON_TAP_MS + BUTTON_GAP_MS, lambda: s.feed_button("press"))
        self.at(t_ms + 2 * BUTTON_TAP_MS + BUTTON_GAP_MS, lambda: s.feed_button("release"))

    def hold_press(self, t_ms: float) -> None:
        s = self.session
        hold = self.config.control.hold_ms + HOLD_EXTRA_MS
        self.at(t_ms, lambda: s.feed_button("press"))
        self.at(t_ms + hold, lambda: s.feed_button("release"))

    # -- driving ----------------------------------------------------------

    def feed_idle_tilt(self) -> None:
        self.session.feed_tilt(self.noise_p.step(), self.noise_r.step())

    def track_path(
        self,
        path: ReferencePath,
        direction: int,
        stop_at_s: float,
        liquid: bool = False,
        omega_override: float | None = None,
    ) -> None:
        st = self.session.state
        dt = self.session.dt_s
        self.s_est, e = path.project(self.s_est, st.pose.x, st.pose.y)

        v_allow = path.speed_allowance(
            self.s_est, direction, stop_at_s, self.ops.lookahead_m, ACCEL_CMD
        )
        v_tgt = direction * min(v_allow, self.ops.cruise_mps)
        dv = ACCEL_CMD * dt
        self.v_cmd = min(max(self.v_cmd - dv, v_tgt), self.v_cmd + dv)

        lead = (FF_LEAD_LIQUID_M if liquid else FF_LEAD_M) * direction
        _, _, h_ref, kappa = path.sample(self.s_est + lead)
        h_err = wrap_angle(h_ref - st.pose.theta)
        w_tgt = kappa * self.v_cmd + K_HEADING * h_err - K_CROSS * self.v_cmd * e
        w_max = self.config.control.omega_max
        w_tgt = min(max(w_tgt, -w_max), w_max)
        if omega_override is not None:
            self.w_cmd = omega_override
        else:
            dw = (ALPHA_CMD_LIQUID if liquid else ALPHA_CMD) * dt
            self.w_cmd = min(max(self.w_cmd - dw, w_tgt), self.w_cmd + dw)

        pitch, roll = tilt_for_velocity(self.v_cmd, self.w_cmd, self.config.control)
        self.session.feed_tilt(pitch + self.noise_p.step(), roll + self.noise_r.step())

    def stopped(self) -> bool:
        st = self.session.state
        return math.hypot(st.vx, st.vy) < STOP_SPEED and abs(st.omega) < 2 * STOP_SPEED

    def fail(self, reason: str) -> None:
        self.failed = reason
        self.done = True


class NavOperator(_ScriptedOperator):
    """Drives the navigation course from A to B and reverses back to A.

    The return leg is driven backwards along the same reference path (the
    base cannot strafe, and turning around twice would put round trips far
    outside the observed completion times). The operator only decides what
    to do; completion and deviation are judged from the record stream.
    """

    def __init__(self, session: SimSession, rng: np.random.Generator):
        super().__init__(session, rng)
        self.path = ReferencePath(
            session.scenario.waypoints,
            self.ops.turn_radius_90_m,
            self.ops.turn_radius_45_m,
            cruise=self.ops.cruise_mps,
            omega_max=self.config.control.omega_max,
        )
        self.phase = "engage"
        self._pause_until = 0.0
        self.hold_press(self.reaction_ms())

    def act(self) -> None:
        t = self.session.t_ms
        self.run_due(t)
        if self.done:
            return
        if self.phase == "engage":
            return  # waiting for MOVEMENT; observe() flips the phase
        if self.phase == "outbound":
            self.track_path(self.path, +1, self.path.length)
            if self.s_est >= self.path.length - 0.02 and self.stopped():
                self.phase = "turnpause"
                self._pause_until = t + self.reaction_ms()
        elif self.phase == "turnpause":
            self.feed_idle_tilt()
            if t >= self._pause_until:
                self.phase = "return"
        elif self.phase == "return":
            self.track_path(self.path, -1, 0.0)
            if self.s_est <= 0.02 and self.stopped():
                self.done = True

    def observe(self, records: list[dict]) -> None:
        for r in records:
            if r["type"] != "event":
                continue
            if r["kind"] == "mode" and r["mode"] == Mode.MOVEMENT.value:
                if self.phase == "engage":
                    self.phase = "outbound"
                    self.s_est = 0.0
            elif r["kind"] == "collision":
                self.fail("collision")


class TransferOperator(_ScriptedOperator):
    """Full pick-and-place dance: approach, grasp, carry, release.

    Grip level comes from a visual estimate that is sometimes one or two
    levels too light (the slippery-surface failure mode); slip feedback,
    when heeded, buys one corrective escalation per slip episode because
    the warning is edge-triggered. The fragility of delicate objects is
    visually obvious, so the estimate never picks a crushing force.
    """

    def __init__(
        self,
        session: SimSession,
        rng: np.random.Generator,
        obj: GraspObject,
        pickup: tuple[float, float],
        use_feedback: bool = True,
    ):
        super().__init__(session, rng)
        self.path = ReferencePath(
            session.scenario.waypoints,
            self.ops.turn_radius_90_m,
            self.ops.turn_radius_45_m,
            cruise=self.ops.cruise_mps,
            omega_max=self.config.control.omega_max,
        )
        self.obj = obj
        self.use_feedback = use_feedback
        self.liquid = obj.has_liquid and obj.fill_fraction > 0.8

        # trial-level draws, fixed order (keeps ablation pairs comparable)
        u = float(self.rng_plan.random())
        if u < self.ops.misjudge_two_p:
            shift = 2
        elif u < self.ops.misjudge_two_p + self.ops.misjudge_one_p:
            shift = 1
        else:
            shift = 0
        self.level = self._choose_level(shift)
        park_err = float(self.rng_plan.normal(0.0, self.ops.grasp_misalign_sigma_m))
        self.jerky = bool(self.rng_plan.random() < self.ops.jerky_turn_p)
        wrong_release = bool(self.rng_plan.random() < self.ops.wrong_release_p)
        self.release_strategy = self._choose_release(wrong_release)

        # stop with the station inside the gripper footprint, give or take
        # the operator's parking judgment
        s_station, _ = self.path.project(0.0, pickup[0], pickup[1])
        self.pickup_s = s_station - self.config.robot.radius_m + 0.05 + park_err

        self.phase = "dance_move1"
        self.grasp_attempts = 0
        self._settle_until = 0.0
        self._jerk_fired = False
        self._jerk_until: float | None = None
        self._jerk_sign = 1.0
        self.hold_press(self.reaction_ms())

    def _choose_level(self, shift: int) -> int:
        forces = self.config.control.level_force_n
        k_star = 1
        for k in (3, 2, 1):  # lightest force that still meets the requirement
            if forces[k - 1] >= self.obj.required_force_n:
                k_star = k
                break
        k = k_star + shift
        if k > 3:  # cannot misjudge lighter than L3; the error flips heavier
            k = k_star - shift
        k = min(max(k, 1), 3)
        while k < 3 and forces[k - 1] > self.obj.fragility_n:
            k += 1
        return k

    def _choose_release(self, wrong: bool) -> int:
        correct = 1 if self.liquid else 2  # GRADUAL for a nearly full cup
        if not wrong:
            return correct
        return 2 if correct == 1 else 3

    # -- per-step behaviour -------------------------------------------------

    def act(self) -> None:
        t = self.session.t_ms
        self.run_due(t)
        if self.done:
            return
        phase = self.phase
        if phase.startswith("dance"):
            if self.session.mode is Mode.MOVEMENT:
                self.feed_idle_tilt()
        elif phase == "approach":
            self.track_path(self.path, +1, self.pickup_s)
            if self.s_est >= self.pickup_s - 0.02 and self.stopped():
                self.phase = "dance_grasp1"
                self.double_press(t + self.reaction_ms())
        elif phase == "settle":
            if t >= self._settle_until:
                self.phase = "dance_move2"
                self.hold_press(t + self.reaction_ms())
        elif phase == "carry":
            self._carry_step(t)
        # "grasping" and "releasing" wait on events; observe() moves us on

    def _carry_step(self, t: float) -> None:
        override = None
        kappa_here = self.path.sample(self.s_est)[3]
        if self._jerk_until is not None:
            if t < self._jerk_until:
                first_half = t < self._jerk_until - JERK_PHASE_MS
                mag = self.config.control.omega_max if first_half else -0.4
                override = self._jerk_sign * mag
            else:
                self._jerk_until = None
        elif self.jerky and not self._jerk_fired and abs(kappa_here) > 1e-9:
            self._jerk_fired = True
            self._jerk_sign = math.copysign(1.0, kappa_here)
            self._jerk_until = t + 2 * JERK_PHASE_MS
            override = self._jerk_sign * self.config.control.omega_max
        self.track_path(
            self.path, +1, self.path.length, liquid=self.liquid, omega_override=override
        )
        if self.s_est >= self.path.length - 0.02 and self.stopped():
            self.phase = "dance_grasp2"
            self.double_press(t + self.reaction_ms())

    # -- event reactions ------------------------------------------------------

    def observe(self, records: list[dict]) -> None:
        for r in records:
            if r["type"] != "event":
                continue
            kind = r["kind"]
            if kind == "mode":
                self._on_mode(r)
            elif kind == "grasp":
                self._on_grasp(r)
            elif kind == "feedback":
                self._on_feedback(r)
            elif kind == "hazard" and r["hazard"] == "DROP":
                self.fail("dropped")
            elif kind == "collision":
                self.fail("collision")
            elif kind == "release":
                self.done = True
            elif kind == "rejected" and r["action"] == "release":
                # still rolling; settle and try again
                self.at(r["t_ms"] + self.reaction_ms(), self._send_release)

    def _on_mode(self, r: dict) -> None:
        mode, t = r["mode"], r["t_ms"]
        if mode == Mode.MOVEMENT.value and self.phase == "dance_move1":
            self.phase = "approach"
            self.s_est = 0.0
        elif mode == Mode.MOVEMENT.value and self.phase == "dance_move2":
            self.phase = "carry"
        elif mode == Mode.GRASP.value and self.phase == "dance_grasp1":
            self.phase = "grasping"
            self.at(t + self.reaction_ms(), self._send_grasp)
        elif mode == Mode.GRASP.value and self.phase == "dance_grasp2":
            self.phase = "releasing"
            self.at(t + self.reaction_ms(), self._send_release)

    def _send_grasp(self) -> None:
        self.grasp_attempts += 1
        self.session.feed_grip("grasp", level=self.level)

    def _send_release(self) -> None:
        self.session.feed_grip("release", strategy=self.release_strategy)

    def _on_grasp(self, r: dict) -> None:
        outcome = r["outcome"]
        if outcome in ("HELD", "SLIP"):
            self.phase = "settle"
            self._settle_until = r["t_ms"] + GRASP_SETTLE_MS
        elif outcome == "MISSED" and self.grasp_attempts < 3:
            self.at(r["t_ms"] + self.reaction_ms(), self._send_grasp)
        else:
            self.fail(f"grasp {outcome}")

    def _on_feedback(self, r: dict) -> None:
        if not self.use_feedback or self.phase not in ("grasping", "settle"):
            return
        t_act = r["t_ms"] + self.reaction_ms()
        if r["index"] == SLIP_FEEDBACK:
            self.at(t_act, lambda: self.session.feed_grip("adjust", delta=1))
        elif r["index"] == OVER_FORCE_FEEDBACK:
            self.at(t_act, lambda: self.session.feed_grip("adjust", delta=-1))
        else:
            return
        if self.phase == "settle":
            self._settle_until = max(self._settle_until, t_act + ADJUST_SETTLE_MS)


def run_trial(session: SimSession, op: _ScriptedOperator, time_limit_s: float) -> None:
    """Drive a session with an operator until it finishes or time runs out."""
    limit_steps = int(round(time_limit_s * 1000.0 / session.dt_ms))
    while not op.done and session.step_index < limit_steps:
        op.act()
        op.observe(session.step())
    session.close()
