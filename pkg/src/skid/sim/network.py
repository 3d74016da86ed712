"""Message-pool network with latency, bandwidth, range gating, and drops.

Delivery time is sent_at + base_latency + size / (bandwidth * mult(distance))
where mult is a piecewise-constant degradation versus sender-receiver
distance. Links beyond the range limit drop the message silently (counted).
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

MESSAGE_KINDS = ("descriptor", "scan_request", "scan_payload", "loop_report", "pose_update")

# (distance upper bound, bandwidth multiplier); the last knot carries a deep
# penalty so multi-kilobyte payloads visibly stall near the range limit
DEFAULT_DEGRADATION = ((15.0, 1.0), (20.0, 0.25), (25.0, 0.05), (30.0, 0.008))


@dataclass(frozen=True)
class NetworkModel:
    base_latency: float = 0.02
    bandwidth: float = 2_097_152.0  # bytes/second
    range_limit: float = 30.0
    degradation: tuple = DEFAULT_DEGRADATION

    def __post_init__(self):
        if self.base_latency < 0.0 or self.bandwidth <= 0.0 or self.range_limit <= 0.0:
            raise ValueError("latency >= 0, bandwidth > 0, range_limit > 0 required")
        knots = tuple(self.degradation)
        if not knots or any(m <= 0.0 for _, m in knots):
            raise ValueError("degradation multipliers must be positive")
        if list(knots) != sorted(knots, key=lambda k: k[0]):
            raise ValueError("degradation knots must be sorted by distance")
        object.__setattr__(self, "degradation", knots)

    def multiplier(self, distance: float) -> float:
        for bound, mult in self.degradation:
            if distance <= bound:
                return mult
        return self.degradation[-1][1]

    def latency(self, size_bytes: int, distance: float) -> float:
        return self.base_latency + size_bytes / (self.bandwidth * self.multiplier(distance))


@dataclass
class Envelope:
    msg_id: int
    sender: str
    receiver: str
    kind: str
    payload: bytes
    sent_at: float
    deliver_at: float


@dataclass
class MessageStats:
    published: int = 0
    delivered: int = 0
    dropped: int = 0
    bytes_by_kind: dict = field(default_factory=dict)


class MessagePool:
    """Shared in-flight message set with exactly-once, ordered polling."""

    def __init__(self, model: NetworkModel):
        self.model = model
        self.stats = MessageStats()
        self._next_id = 0
        self._queues: dict[str, list[tuple[float, int, Envelope]]] = {}
        # msg_id, kind, bytes, sent_at, deliver_at (nan if dropped), dropped
        self.log: list[tuple[int, str, int, float, float, int]] = []

    def publish(
        self,
        sender: str,
        receiver: str,
        kind: str,
        payload: bytes,
        sent_at: float,
        sender_pos: np.ndarray,
        receiver_pos: np.ndarray,
    ) -> Envelope | None:
        """Queue a message; returns None when the link is out of range."""
        if kind not in MESSAGE_KINDS:
            raise ValueError(f"unknown message kind {kind!r}")
        msg_id = self._next_id
        self._next_id += 1
        size = len(payload)
        self.stats.published += 1
        self.stats.bytes_by_kind[kind] = self.stats.bytes_by_kind.get(kind, 0) + size
        distance = float(
            np.linalg.norm(
                np.asarray(sender_pos, dtype=np.float64)
                - np.asarray(receiver_pos, dtype=np.float64)
            )
        )
        if distance > self.model.range_limit:
            self.stats.dropped += 1
            self.log.append((msg_id, kind, size, sent_at, float("nan"), 1))
            return None
        deliver_at = sent_at + self.model.latency(size, distance)
        env = Envelope(msg_id, sender, receiver, kind, payload, sent_at, deliver_at)
        heapq.heappush(self._queues.setdefault(receiver, []), (deliver_at, msg_id, env))
        self.log.append((msg_id, kind, size, sent_at, deliver_at, 0))
        return env

    def poll(self, receiver: str, now: float) -> list[Envelope]:
        """All envelopes due by `now`, ordered by (deliver_at, msg_id), exactly once."""
        queue = self._queues.get(receiver)
        if not queue:
            return []
        out = []
        while queue and queue[0][0] <= now:
            _, _, env = heapq.heappop(queue)
            out.append(env)
            self.stats.delivered += 1
        return out

    def pending(self, receiver: str) -> int:
        return len(self._queues.get(receiver, []))
