"""Short-frame radio link: codec plus a seeded lossy transport model.

Wire format (docs/frame_format.md), at most 32 bytes on air:

    seq      uint16 LE   (wrapping sender sequence number)
    kind     uint8       (FrameKind)
    len      uint8       (payload byte count, <= 26)
    payload  len bytes
    crc      uint16 LE   (CRC-16/CCITT over everything before it)

The simulated transport draws per-attempt losses and latencies from a seeded
generator, retries on missing acknowledgements, can deliver duplicates when
only the ack was lost, and deduplicates by sequence number at the receiver.
Emergency-stop frames bypass the loss model by default; a real deployment
would repeat them on a reserved slot.
"""

from __future__ import annotations

import enum
import heapq
from dataclasses import dataclass, field

import numpy as np

from .errors import FrameDecodeError, ValidationError

MAX_FRAME_BYTES = 32
MAX_PAYLOAD_BYTES = 26
_HEADER_BYTES = 4
_CRC_BYTES = 2


class FrameKind(enum.IntEnum):
    VELOCITY = 1
    GRIP = 2
    FEEDBACK = 3
    ESTOP = 4
    ACK = 5


@dataclass(frozen=True)
class Frame:
    kind: FrameKind
    seq: int
    payload: bytes = b""
    t_ms: float = 0.0  # sender timestamp, not part of the wire format


def crc16_ccitt(data: bytes, crc: int = 0xFFFF) -> int:
    """CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, no reflection."""
    for byte in data:
        crc ^= byte << 8
        for _ in range(8):
            if crc & 0x8000:
                crc = ((crc << 1) ^ 0x1021) & 0xFFFF
            else:
                crc = (crc << 1) & 0xFFFF
    return crc


def encode_frame(frame: Frame) -> bytes:
    if not isinstance(frame.kind, FrameKind):
        raise ValidationError(f"unknown frame kind {frame.kind!r}")
    if not 0 <= frame.seq <= 0xFFFF:
        raise ValidationError("seq must fit in uint16")
    if len(frame.payload) > MAX_PAYLOAD_BYTES:
        raise ValidationError(
            f"payload of {len(frame.payload)} bytes exceeds {MAX_PAYLOAD_BYTES}"
        )
    body = (
        frame.seq.to_bytes(2, "little")
        + bytes([int(frame.kind), len(frame.payload)])
        + frame.payload
    )
    return body + crc16_ccitt(body).to_bytes(2, "little")


def decode_frame(buf: bytes, t_ms: float = 0.0) -> Frame:
    n = len(buf)
    if n < _HEADER_BYTES + _CRC_BYTES:
        raise FrameDecodeError(f"frame too short ({n} bytes)")
    if n > MAX_FRAME_BYTES:
        raise FrameDecodeError(f"frame too long ({n} bytes)")
    body, crc_bytes = buf[:-_CRC_BYTES], buf[-_CRC_BYTES:]
    if crc16_ccitt(body) != int.from_bytes(crc_bytes, "little"):
        raise FrameDecodeError("CRC mismatch")
    seq = int.from_bytes(buf[0:2], "little")
    try:
        kind = FrameKind(buf[2])
    except ValueError:
        raise FrameDecodeError(f"unknown frame kind {buf[2]}") from None
    plen = buf[3]
    if plen != n - _HEADER_BYTES - _CRC_BYTES:
        raise FrameDecodeError("length field does not match frame size")
    return Frame(kind=kind, seq=seq, payload=buf[4 : 4 + plen], t_ms=t_ms)


@dataclass(frozen=True)
class LinkParams:
    latency_ms: float = 20.0
    jitter_ms: float = 10.0
    drop_rate: float = 0.01
    retries: int = 3
    ack_timeout_ms: float = 50.0
    estop_bypass: bool = True
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.drop_rate < 1.0:
            raise ValidationError("drop_rate must be in [0, 1)")
        if self.latency_ms < 0 or self.jitter_ms < 0 or self.jitter_ms > self.latency_ms:
            raise ValidationError("need 0 <= jitter_ms <= latency_ms")
        if self.retries < 0 or self.ack_timeout_ms <= 0:
            raise ValidationError("retries must be >= 0 and ack_timeout_ms > 0")


@dataclass
class LinkStats:
    sent: int = 0
    first_attempt_drops: int = 0
    delivered: int = 0
    duplicates: int = 0
    gave_up: int = 0
    latencies_ms: list[float] = field(default_factory=list)


class SimulatedLink:
    """One-directional lossy channel with retries and receiver dedup.

    send() draws the full delivery schedule for a frame immediately (which
    attempts are lost, when the survivor lands); receive(now) then hands over
    frames whose delivery time has arrived, in delivery order. Determinism:
    the schedule is a pure function of (params.seed, send order).
    """

    def __init__(self, params: LinkParams | None = None):
        self.params = params or LinkParams()
        self.stats = LinkStats()
        self._rng = np.random.default_rng(self.params.seed)
        self._queue: list[tuple[float, int, Frame, float]] = []
        self._tiebreak = 0
        self._seen: set[int] = set()
        self._seen_order: list[int] = []

    def send(self, frame: Frame, now_ms: float) -> None:
        p = self.params
        self.stats.sent += 1
        bypass = p.estop_bypass and frame.kind is FrameKind.ESTOP
        scheduled = False
        for attempt in range(p.retries + 1):
            attempt_t = now_ms + attempt * p.ack_timeout_ms
            lost = (not bypass) and (self._rng.random() < p.drop_rate)
            if attempt == 0 and lost:
                self.stats.first_attempt_drops += 1
            if lost:
                continue
            deliver_t = attempt_t + p.latency_ms + self._rng.uniform(-p.jitter_ms, p.jitter_ms)
            heapq.heappush(self._queue, (deliver_t, self._tiebreak, frame, now_ms))
            self._tiebreak += 1
            scheduled = True
            ack_lost = (not bypass) and (self._rng.random() < p.drop_rate)
            if not ack_lost:
                return
        if not scheduled:
            self.stats.gave_up += 1

    def receive(self, now_ms: float) -> list[tuple[float, Frame]]:
        """Frames delivered up to now_ms, deduplicated by sequence number."""
        out: list[tuple[float, Frame]] = []
        while self._queue and self._queue[0][0] <= now_ms:
            deliver_t, _, frame, sent_t = heapq.heappop(self._queue)
            if frame.seq in self._seen:
                self.stats.duplicates += 1
                continue
            self._remember(frame.seq)
            self.stats.delivered += 1
            self.stats.latencies_ms.append(deliver_t - sent_t)
            out.append((deliver_t, frame))
        return out

    def _remember(self, seq: int, cap: int = 4096) -> None:
        self._seen.add(seq)
        self._seen_order.append(seq)
        if len(self._seen_order) > cap:
            self._seen.discard(self._seen_order.pop(0))

    @property
    def pending(self) -> int:
        return len(self._queue)
