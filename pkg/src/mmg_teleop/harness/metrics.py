"""Trial metrics computed purely from session record streams.

Everything here is a function of the JSONL records a session emits, never of
live simulator state, so any metric can be recomputed from a stored log (or
a replayed one) and will agree bit-for-bit with what the experiment reported.
"""

from __future__ import annotations

import math

import numpy as np

from ..control import Mode
from ..errors import ValidationError
from .session import events, executed_path, telemetry

STOP_SPEED_MPS = 0.02  # slower than this counts as stationary


def path_deviation(points: np.ndarray, polyline: np.ndarray) -> np.ndarray:
    """Distance from each point to the nearest segment of a polyline."""
    pts = np.asarray(points, dtype=float)
    line = np.asarray(polyline, dtype=float)
    if line.ndim != 2 or line.shape[0] < 2 or line.shape[1] != 2:
        raise ValidationError("polyline must be (M >= 2, 2)")
    if pts.size == 0:
        return np.zeros(0)
    a = line[:-1]  # (M-1, 2)
    ab = line[1:] - a
    ab_len2 = np.einsum("ij,ij->i", ab, ab)
    # (N, M-1) projection parameter of each point onto each segment
    ap = pts[:, None, :] - a[None, :, :]
    t = np.clip(np.einsum("nmj,mj->nm", ap, ab) / ab_len2[None, :], 0.0, 1.0)
    closest = a[None, :, :] + t[:, :, None] * ab[None, :, :]
    d = np.linalg.norm(pts[:, None, :] - closest, axis=2)
    return d.min(axis=1)


def _speed(rec: dict) -> float:
    return math.hypot(rec["vx"], rec["vy"])


def navigation_metrics(
    records: list[dict],
    waypoints,
    finish_tolerance_m: float = 0.20,
) -> dict:
    """Judge one out-and-back navigation run from its records.

    The clock starts at the mode change into MOVEMENT (the operator is
    "driving" from then on) and stops at the first telemetry sample where
    the base is back within tolerance of the start and stationary, after
    having reached the far waypoint. Deviation is measured against the raw
    waypoint polyline over exactly that interval.
    """
    wp = np.asarray(waypoints, dtype=float)
    start, goal = wp[0], wp[-1]
    mode_events = events(records, "mode")
    t0 = next(
        (e["t_ms"] for e in mode_events if e["mode"] == Mode.MOVEMENT.value), None
    )
    out = {
        "success": False,
        "completion_s": float("nan"),
        "mean_deviation_m": float("nan"),
        "max_deviation_m": float("nan"),
        "collisions": 0,
        "failure": None,
    }
    tel = telemetry(records)
    if tel:
        out["collisions"] = tel[-1]["collisions"]
    if t0 is None:
        out["failure"] = "never entered MOVEMENT"
        return out

    reached_t = None
    done_t = None
    driving = [r for r in tel if r["t_ms"] >= t0]
    for r in driving:
        pos = (r["x"], r["y"])
        if reached_t is None:
            if math.dist(pos, goal) <= finish_tolerance_m:
                reached_t = r["t_ms"]
        elif math.dist(pos, start) <= finish_tolerance_m and _speed(r) < STOP_SPEED_MPS:
            done_t = r["t_ms"]
            break
    if reached_t is None:
        out["failure"] = "never reached the far waypoint"
        return out
    if done_t is None:
        out["failure"] = "never returned to start"
        return out

    span = [r for r in driving if r["t_ms"] <= done_t]
    dev = path_deviation(np.array([[r["x"], r["y"]] for r in span]), wp)
    out["completion_s"] = (done_t - t0) / 1000.0
    out["mean_deviation_m"] = float(dev.mean())
    out["max_deviation_m"] = float(dev.max())
    out["success"] = out["collisions"] == 0
    if out["collisions"]:
        out["failure"] = "collision"
    return out


def transfer_metrics(records: list[dict], time_limit_s: float = 40.0) -> dict:
    """Judge one pick-and-place run from its records.

    Phases chain: a trial only counts toward transport if its grip
    succeeded, and only counts toward release if transport succeeded, which
    is how the per-phase denominators shrink. Grip covers from the grasp
    attempt until carrying starts (the next MOVEMENT mode change); transport
    covers the carry; release is judged by its own outcome. The drop monitor
    fires inside the grip window by construction (an uncorrected force
    deficit outlasts its 0.5 s budget during the settle pause), so a DROP
    after carrying starts is charged to transport.
    """
    grasps = events(records, "grasp")
    contact = [e for e in grasps if e["outcome"] in ("HELD", "SLIP")]
    releases = events(records, "release")
    drops = [e for e in events(records, "hazard")]
    mode_events = events(records, "mode")

    out = {
        "grasp_attempts": len(grasps),
        "grip_ok": False,
        "transport_ok": None,  # None = not attempted (denominator excluded)
        "release_ok": None,
        "full_ok": False,
        "duration_s": float("nan"),
        "level": contact[0]["level"] if contact else None,
        "adjustments": len(events(records, "adjust")),
        "failure": None,
    }
    if not contact:
        out["failure"] = "no grasp made contact"
        return out
    t_grasp = contact[0]["t_ms"]

    carry_t = next(
        (
            e["t_ms"]
            for e in mode_events
            if e["mode"] == Mode.MOVEMENT.value and e["t_ms"] > t_grasp
        ),
        None,
    )
    grip_end = carry_t if carry_t is not None else float("inf")
    grip_hazards = [
        e for e in drops if e["hazard"] == "DROP" and t_grasp <= e["t_ms"] <= grip_end
    ]
    if grip_hazards:
        out["failure"] = "dropped during grasp"
        return out
    out["grip_ok"] = True
    if carry_t is None:
        out["failure"] = "never started carrying"
        return out

    release_t = releases[0]["t_ms"] if releases else float("inf")
    carry_hazards = [e for e in drops if carry_t < e["t_ms"] <= release_t]
    if carry_hazards:
        out["transport_ok"] = False
        out["failure"] = "+".join(sorted({e["hazard"] for e in carry_hazards}))
        return out
    if not releases:
        out["transport_ok"] = False
        out["failure"] = "never released"
        return out
    out["transport_ok"] = True

    rel = releases[0]
    out["duration_s"] = rel["t_ms"] / 1000.0
    out["release_ok"] = rel["outcome"] == "PLACED"
    if not out["release_ok"]:
        out["failure"] = f"release {rel['outcome']}"
        return out
    out["full_ok"] = out["duration_s"] <= time_limit_s
    if not out["full_ok"]:
        out["failure"] = "over time limit"
    return out


def deviation_series(records: list[dict], waypoints) -> np.ndarray:
    """Per-telemetry-sample deviation from the waypoint polyline."""
    return path_deviation(executed_path(records), np.asarray(waypoints, dtype=float))
