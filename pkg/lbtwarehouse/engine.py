"""Discrete-event kernel for the warehouse LBT simulator.

The kernel owns the virtual clock (integer microseconds), an event queue
ordered by ``(due, seq)`` and the seeded random streams every other module
draws from. A run is a single logical timeline; independent runs share
nothing.
"""

from __future__ import annotations

import hashlib
import heapq
import logging
import zlib
from dataclasses import dataclass, field
from typing import Any, Callable, Literal

import numpy as np

from .exceptions import SimulationError

_LOGGER = logging.getLogger(__name__)

SimTime = int
Duration = int

EventState = Literal["pending", "fired", "cancelled"]

RNG_ALGORITHM = "PCG64"


@dataclass(eq=False)
class Event:
    """A scheduled callback on the virtual timeline."""

    due: SimTime
    target: str
    kind: str
    callback: Callable[[SimTime], Any] | None = None
    payload: Any = None
    seq: int = -1
    state: EventState = "pending"

    @property
    def live(self) -> bool:
        """Whether the event is still queued."""
        return self.state == "pending"

    def to_dict(self) -> dict[str, Any]:
        """Convert to dictionary for trace export."""
        return {
            "due": self.due,
            "seq": self.seq,
            "target": self.target,
            "kind": self.kind,
            "state": self.state,
        }


@dataclass
class KernelCounters:
    """Bookkeeping for the no-lost-events property."""

    scheduled: int = 0
    fired: int = 0
    cancelled: int = 0

    def to_dict(self) -> dict[str, int]:
        """Convert to dictionary."""
        return {
            "scheduled": self.scheduled,
            "fired": self.fired,
            "cancelled": self.cancelled,
        }


class SimulationKernel:
    """Virtual clock plus a deterministic ``(due, seq)`` ordered event queue."""

    def __init__(self) -> None:
        """Initialize an empty kernel at t=0."""
        self._now: SimTime = 0
        self._seq = 0
        self._queue: list[tuple[SimTime, int, Event]] = []
        self._live = 0
        self._hash = hashlib.sha256()
        self.counters = KernelCounters()

    @property
    def now(self) -> SimTime:
        """Current virtual time in microseconds."""
        return self._now

    @property
    def queued(self) -> int:
        """Number of live events still in the queue."""
        return self._live

    def schedule(self, event: Event) -> Event:
        """Queue an event and return it as the cancellation handle.

        Args:
            event: Event with ``due`` at or after the current clock

        Returns:
            Event: The same object, now carrying its insertion sequence number

        Raises:
            SimulationError: If the event is due in the past
        """
        if event.due < self._now:
            raise SimulationError(
                f"Cannot schedule {event.kind} for {event.target} at t={event.due} "
                f"before current time t={self._now}"
            )
        if event.seq >= 0:
            raise SimulationError(f"Event {event.kind} was already scheduled")
        event.seq = self._seq
        self._seq += 1
        event.state = "pending"
        heapq.heappush(self._queue, (event.due, event.seq, event))
        self._live += 1
        self.counters.scheduled += 1
        return event

    def schedule_at(
        self,
        due: SimTime,
        target: str,
        kind: str,
        callback: Callable[[SimTime], Any],
        payload: Any = None,
    ) -> Event:
        """Schedule ``callback(now)`` at an absolute time."""
        return self.schedule(Event(due, target, kind, callback, payload))

    def schedule_in(
        self,
        delay: Duration,
        target: str,
        kind: str,
        callback: Callable[[SimTime], Any],
        payload: Any = None,
    ) -> Event:
        """Schedule ``callback(now)`` after a relative delay."""
        return self.schedule_at(self._now + delay, target, kind, callback, payload)

    def cancel(self, handle: Event | None) -> bool:
        """Remove a live event from the queue.

        Returns:
            bool: True if the event was live, False if it already fired or was
            cancelled before
        """
        if handle is None or handle.state != "pending":
            return False
        # Lazy deletion, the heap entry is skipped when popped
        handle.state = "cancelled"
        self._live -= 1
        self.counters.cancelled += 1
        return True

    def run_until(self, t_end: SimTime) -> int:
        """Fire every event due at or before ``t_end`` in ``(due, seq)`` order.

        Args:
            t_end: Absolute end of the processing horizon

        Returns:
            int: Number of events fired during this call
        """
        if t_end < self._now:
            raise SimulationError(
                f"run_until({t_end}) is before current time t={self._now}"
            )
        fired = 0
        queue = self._queue
        while queue and queue[0][0] <= t_end:
            due, seq, event = heapq.heappop(queue)
            if event.state != "pending":
                continue
            self._now = due
            event.state = "fired"
            self._live -= 1
            self.counters.fired += 1
            fired += 1
            self._hash.update(f"{due},{seq},{event.target},{event.kind}\n".encode())
            if event.callback is not None:
                event.callback(due)
        self._now = t_end
        return fired

    def trace_hash(self) -> str:
        """SHA-256 over the fired ``(due, seq, target, kind)`` sequence."""
        return self._hash.hexdigest()


class RngStream:
    """One named, independently seeded random substream."""

    def __init__(self, seed: int, stream_id: str) -> None:
        """Initialize the stream.

        Args:
            seed: Run seed (64-bit)
            stream_id: Stable identifier such as ``node-7`` or ``scenario``
        """
        self.seed = seed
        self.stream_id = stream_id
        self.algorithm = RNG_ALGORITHM
        # must be identical in every worker process, str hashes are salted
        spawn_key = (zlib.crc32(stream_id.encode("utf-8")),)
        sequence = np.random.SeedSequence(entropy=seed, spawn_key=spawn_key)
        self._generator = np.random.Generator(np.random.PCG64(sequence))

    def integers(self, lo: int, hi: int) -> int:
        """Uniform integer on the closed range ``[lo, hi]``."""
        return int(self._generator.integers(lo, hi, endpoint=True))

    def exponential(self, mean: float) -> float:
        """Exponentially distributed float with the given mean."""
        return float(self._generator.exponential(mean))


class ScriptedStream(RngStream):
    """Stream that replays forced draws, used by scripted scenarios."""

    def __init__(self, stream_id: str, values: list[int]) -> None:
        self.seed = 0
        self.stream_id = stream_id
        self.algorithm = "scripted"
        self._values = list(values)

    def integers(self, lo: int, hi: int) -> int:
        """Return the next forced value, which must lie in ``[lo, hi]``."""
        if not self._values:
            raise SimulationError(f"Scripted stream {self.stream_id} is exhausted")
        value = self._values.pop(0)
        if not lo <= value <= hi:
            raise SimulationError(
                f"Scripted draw {value} outside [{lo}, {hi}] on {self.stream_id}"
            )
        return value

    def exponential(self, mean: float) -> float:
        raise SimulationError("Scripted streams only provide integer draws")


@dataclass
class RandomStreams:
    """Factory for per-node substreams derived from one run seed."""

    seed: int
    overrides: dict[str, RngStream] = field(default_factory=dict)
    _streams: dict[str, RngStream] = field(default_factory=dict, repr=False)

    def stream(self, stream_id: str) -> RngStream:
        """Return the (cached) stream for an identifier."""
        if stream_id in self.overrides:
            return self.overrides[stream_id]
        if stream_id not in self._streams:
            self._streams[stream_id] = RngStream(self.seed, stream_id)
        return self._streams[stream_id]


def node_stream_id(address: int) -> str:
    """Stream identifier for a node address."""
    return f"node-{address}"


def uniform_us(stream: RngStream, lo: Duration, hi: Duration) -> Duration:
    """Uniform integer microseconds on ``[lo, hi]``.

    Raises:
        SimulationError: If ``lo > hi``
    """
    if lo > hi:
        raise SimulationError(f"uniform_us called with lo={lo} > hi={hi}")
    if lo == hi:
        return lo
    return stream.integers(lo, hi)


def uniform_step_us(stream: RngStream, hi: Duration, step: Duration) -> Duration:
    """Uniform multiple of ``step`` on ``[0, hi]``."""
    if step <= 0:
        raise SimulationError(f"Backoff step must be positive, got {step}")
    return step * uniform_us(stream, 0, hi // step)
