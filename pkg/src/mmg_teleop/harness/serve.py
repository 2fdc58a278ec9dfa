"""WebSocket bridge exposing a live simulated session to a console.

One WebSocket connection drives one session: the client streams operator
inputs and receives telemetry and feedback frames back. Messages are single
JSON objects with a `type` field; inbound types are tilt/button/grip/estop,
outbound are telemetry/feedback. The simulation advances on a fixed step
paced against the wall clock, inputs are applied (and logged) at the step
boundary after they arrive, and the JSONL session log replays exactly like
a scripted run.
"""

from __future__ import annotations

import asyncio
import logging
import math
import time
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from ..sim import Scenario
from .config import AppConfig
from .session import SimSession

log = logging.getLogger(__name__)

_INBOUND_TYPES = ("tilt", "button", "grip", "estop")


def _feed(session: SimSession, msg: dict) -> None:
    """Validate one inbound message and queue it on the session."""
    kind = msg.get("type")
    if kind == "tilt":
        pitch, roll = float(msg["pitch_deg"]), float(msg["roll_deg"])
        if not (math.isfinite(pitch) and math.isfinite(roll)):
            raise ValueError("tilt angles must be finite")
        session.feed_tilt(pitch, roll)
    elif kind == "button":
        session.feed_button(str(msg["kind"]))
    elif kind == "grip":
        session.feed_grip(
            str(msg["action"]),
            level=int(msg.get("level", 0)),
            strategy=int(msg.get("strategy", 0)),
            delta=int(msg.get("delta", 0)),
        )
    elif kind == "estop":
        session.feed_estop(bool(msg.get("engage", True)))
    else:
        raise ValueError(f"unknown message type {kind!r}")


async def _pump(ws: WebSocket, session: SimSession, inbox: asyncio.Queue) -> None:
    """Step the session on a wall-clock pace, forwarding outbound frames."""
    dt_s = session.dt_ms / 1000.0
    next_t = time.monotonic()
    while True:
        while True:
            try:
                msg = inbox.get_nowait()
            except asyncio.QueueEmpty:
                break
            try:
                _feed(session, msg)
            except (KeyError, TypeError, ValueError) as exc:
                log.warning("dropping bad message %r: %s", msg, exc)
        for rec in session.step():
            if rec["type"] == "telemetry":
                await ws.send_json(rec)
            elif rec["type"] == "event" and rec["kind"] == "feedback":
                await ws.send_json(
                    {"type": "feedback", "index": rec["index"], "t_ms": rec["t_ms"]}
                )
        next_t += dt_s
        delay = next_t - time.monotonic()
        if delay > 0:
            await asyncio.sleep(delay)
        else:
            next_t = time.monotonic()  # fell behind; don't try to catch up


def build_app(
    scenario: Scenario, config: AppConfig | None = None, log_dir: str | Path | None = None
) -> FastAPI:
    """FastAPI app with a single /ws endpoint; one session per connection."""
    app = FastAPI()
    config = config or AppConfig()
    counter = {"n": 0}

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        counter["n"] += 1
        log_path = None
        if log_dir is not None:
            log_path = Path(log_dir) / f"session_{counter['n']:04d}.jsonl"
        session = SimSession(scenario, config, log_path=log_path)
        inbox: asyncio.Queue = asyncio.Queue()
        pump = asyncio.create_task(_pump(ws, session, inbox))
        try:
            while True:
                inbox.put_nowait(await ws.receive_json())
        except WebSocketDisconnect:
            pass
        finally:
            pump.cancel()
            try:
                await pump
            except asyncio.CancelledError:
                pass
            session.close()
            if log_path is not None:
                log.info("session log written to %s", log_path)

    return app


def serve(
    scenario: Scenario,
    config: AppConfig | None = None,
    log_dir: str | Path | None = None,
    host: str | None = None,
    port: int | None = None,
) -> None:
    """Run the bridge until interrupted. Raises OSError if the port is busy."""
    import uvicorn

    config = config or AppConfig()
    app = build_app(scenario, config, log_dir=log_dir)
    uvicorn.run(
        app,
        host=config.serve.host if host is None else host,
        port=config.serve.port if port is None else port,
        log_level="warning",
    )
