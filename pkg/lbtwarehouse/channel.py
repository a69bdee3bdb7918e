"""The shared radio medium.

All nodes hear all nodes with zero propagation delay. Occupancy intervals
are half-open ``[start, end)``; any overlap destroys every overlapping
frame, jammer intervals included.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import partial
from typing import Any, Callable, Protocol

from .const import BROADCAST_ADDRESS, FRAME_JAM, JAMMER_ADDRESS
from .engine import Event, SimulationKernel
from .exceptions import SimulationError
from .frame import Frame, RadioParams, airtime, header_offset_us, preamble_us

_LOGGER = logging.getLogger(__name__)

ActivityCallback = Callable[[int], None]


@dataclass(eq=False)
class TransmissionRecord:
    """One occupancy interval on the channel."""

    sender: int
    frame: Frame
    start: int
    end: int
    preamble_end: int
    header_end: int
    collided: bool = False
    receivers: list[int] = field(default_factory=list)

    @property
    def is_jam(self) -> bool:
        """Whether the interval is jammer noise rather than a frame."""
        return self.frame.kind == FRAME_JAM

    def overlaps(self, other: "TransmissionRecord") -> bool:
        """Half-open interval overlap test."""
        return self.start < other.end and other.start < self.end

    def to_row(self) -> dict[str, Any]:
        """Row of the timeline export."""
        return {
            "start_us": self.start,
            "end_us": self.end,
            "sender": self.sender,
            "kind": self.frame.kind,
            "collided": int(self.collided),
        }


@dataclass(frozen=True)
class JamInterval:
    """Scripted jammer occupancy."""

    start: int
    end: int

    def __post_init__(self) -> None:
        """Validate the interval."""
        if self.end <= self.start:
            raise ValueError(f"Jam interval [{self.start}, {self.end}) is empty")


@dataclass(frozen=True)
class CcaDecision:
    """A node's decision that the channel was clear for its listen window."""

    time_us: int
    node: int
    window_us: int
    sensed_activity: bool
    t_ps_us: int


@dataclass
class ChannelTrace:
    """Append-only record of everything that happened on the medium."""

    records: list[TransmissionRecord] = field(default_factory=list)
    cca: list[CcaDecision] = field(default_factory=list)

    def rows(self) -> list[dict[str, Any]]:
        """Timeline rows ordered by start time."""
        return [record.to_row() for record in self.records]

    def delivered(self) -> set[tuple[int, int, int]]:
        """Set of ``(record index, receiver, start)`` deliveries."""
        return {
            (index, receiver, record.start)
            for index, record in enumerate(self.records)
            for receiver in record.receivers
        }


class Receiver(Protocol):
    """What the channel needs from an attached radio."""

    address: int

    def on_frame_start(self, record: TransmissionRecord, now: int) -> None:
        """A transmission began."""

    def is_locked_to(self, record: TransmissionRecord) -> bool:
        """Whether the radio is synchronized to this record."""

    def on_tx_done(self, record: TransmissionRecord, now: int) -> None:
        """The radio's own transmission ended."""

    def end_reception(
        self, record: TransmissionRecord, now: int, delivered: bool
    ) -> None:
        """A record the radio was locked to ended."""


class Channel:
    """Occupancy tracking, collision resolution and carrier sense."""

    def __init__(self, kernel: SimulationKernel, params: RadioParams) -> None:
        """Initialize an idle channel.

        Args:
            kernel: Simulation kernel of the run
            params: Radio parameters used for airtime and header offsets
        """
        self.kernel = kernel
        self.params = params
        self.trace = ChannelTrace()
        self._active: list[TransmissionRecord] = []
        self._transmitting: dict[int, TransmissionRecord] = {}
        self._radios: dict[int, Receiver] = {}
        self._subscribers: list[tuple[int, ActivityCallback, ActivityCallback]] = []
        self._carrier_watchers: list[ActivityCallback] = []
        self._busy = False
        self._idle_check: Event | None = None
        self._end_events: dict[int, Event] = {}

    def attach(self, radio: Receiver) -> None:
        """Register a radio that can lock onto and receive frames."""
        if radio.address in self._radios:
            raise SimulationError(f"Radio {radio.address} attached twice")
        self._radios[radio.address] = radio

    def subscribe_activity(
        self, node: int, on_busy: ActivityCallback, on_idle: ActivityCallback
    ) -> None:
        """Deliver channel-busy-start and channel-idle-start notifications.

        Back-to-back intervals with zero gap merge into one busy period.
        """
        self._subscribers.append((node, on_busy, on_idle))

    def watch_carrier(self, on_carrier: ActivityCallback) -> None:
        """Call ``on_carrier(now)`` at the start of every record, merged or not."""
        self._carrier_watchers.append(on_carrier)

    def is_busy(self, now: int, sense_delay_us: int = 0) -> bool:
        """Whether a transmission or jam interval containing ``now`` is sensed.

        Records that started less than ``sense_delay_us`` ago are not yet
        visible.
        """
        return any(
            record.start + sense_delay_us <= now < record.end for record in self._active
        )

    def is_transmitting(self, node: int) -> bool:
        """Whether a node currently has a live record."""
        return node in self._transmitting

    def active_records(self) -> list[TransmissionRecord]:
        """Records that have started and not yet ended."""
        return list(self._active)

    def begin_transmission(
        self, sender: int, frame: Frame, now: int, duration: int | None = None
    ) -> TransmissionRecord:
        """Put a frame on the air.

        Args:
            sender: Address of the transmitting node (``-1`` for the jammer)
            frame: Frame to send
            now: Current virtual time
            duration: Override of the airtime, used for jam intervals

        Returns:
            TransmissionRecord: The new record

        Raises:
            SimulationError: If the sender is already transmitting
        """
        # records ending at this instant leave the air before the new one starts
        for finished in [r for r in self._active if r.end <= now]:
            self.kernel.cancel(self._end_events.get(id(finished)))
            self._on_frame_end(finished, now)
        if sender in self._transmitting:
            raise SimulationError(f"Node {sender} started a second transmission at t={now}")
        length = airtime(frame, self.params) if duration is None else duration
        if frame.kind == FRAME_JAM:
            pre = hdr = 0
        else:
            pre = preamble_us(frame, self.params)
            hdr = header_offset_us(frame, self.params)
        record = TransmissionRecord(
            sender=sender,
            frame=frame,
            start=now,
            end=now + length,
            preamble_end=now + pre,
            header_end=now + hdr,
        )
        for other in self._active:
            if other.end > now:
                other.collided = True
                record.collided = True
        self._active.append(record)
        self._transmitting[sender] = record
        self.trace.records.append(record)
        self._end_events[id(record)] = self.kernel.schedule_at(
            record.end,
            f"channel:{sender}",
            "frame-end",
            partial(self._on_frame_end, record),
            record,
        )

        if self._idle_check is not None:
            # previous interval ended at this very instant: one merged busy period
            self.kernel.cancel(self._idle_check)
            self._idle_check = None
        elif not self._busy:
            self._busy = True
            for _node, on_busy, _on_idle in self._subscribers:
                on_busy(now)
        for on_carrier in list(self._carrier_watchers):
            on_carrier(now)
        for radio in list(self._radios.values()):
            if radio.address != sender:
                radio.on_frame_start(record, now)
        return record

    def jam(self, interval: JamInterval) -> Event:
        """Schedule a jammer interval."""
        frame = Frame(kind=FRAME_JAM, src=BROADCAST_ADDRESS, dst=BROADCAST_ADDRESS)

        def _start(now: int) -> None:
            self.begin_transmission(
                JAMMER_ADDRESS, frame, now, duration=interval.end - interval.start
            )

        return self.kernel.schedule_at(interval.start, "channel:jammer", "jam-start", _start)

    def deliver(self, record: TransmissionRecord) -> list[tuple[int, Frame]]:
        """Receivers of a finished record, ordered by address.

        Nobody receives a collided frame. Otherwise every radio still
        synchronized to the frame receives it; radios that dropped it after a
        mismatching header are no longer locked.
        """
        if record.collided or record.is_jam:
            return []
        return [
            (address, record.frame)
            for address, radio in sorted(self._radios.items())
            if address != record.sender and radio.is_locked_to(record)
        ]

    def _on_frame_end(self, record: TransmissionRecord, now: int) -> None:
        """Kernel callback for the end of a record."""
        self._active.remove(record)
        del self._transmitting[record.sender]
        self._end_events.pop(id(record), None)

        receivers = self.deliver(record)
        record.receivers = [address for address, _frame in receivers]
        delivered = set(record.receivers)

        sender_radio = self._radios.get(record.sender)
        if sender_radio is not None:
            sender_radio.on_tx_done(record, now)
        for address, radio in list(self._radios.items()):
            if address != record.sender and radio.is_locked_to(record):
                radio.end_reception(record, now, address in delivered)

        if not self._active:
            self._idle_check = self.kernel.schedule_at(
                now, "channel", "idle-check", self._on_idle_check
            )

    def _on_idle_check(self, now: int) -> None:
        """Announce idle-start unless a new frame began at the same instant."""
        self._idle_check = None
        if self._active:
            return
        self._busy = False
        for _node, _on_busy, on_idle in self._subscribers:
            on_idle(now)
