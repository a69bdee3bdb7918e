"""Per-node radio: low-power listening, reception and transmission.

The radio drives the energy DFA with driver calls. While no transmission
is pending it sleeps and wakes up every ``sleep_us`` for ``sniff_on_us``;
a sniff that overlaps a preamble locks the receiver onto the frame until
it ends, or until a mismatching destination address is decoded from the
header. After discarding such a frame the receiver stays in continuous RX
until ``lpl_resume_hold_us`` past the end of the last discarded frame,
also across its own transmissions.
"""

from __future__ import annotations

import logging
from typing import Callable, Literal

from .channel import Channel, TransmissionRecord
from .const import (
    BROADCAST_ADDRESS,
    CALL_LISTEN,
    CALL_LOW_POWER_LISTEN,
    CALL_PACKET_RECEIVED,
    CALL_SEND,
    CALL_SNIFF_END,
    CALL_SNIFF_START,
    CALL_TX_DONE,
    LPL_ALTERNATING,
    STATE_IDLE,
    STATE_RX,
    STATE_SLEEP_LPL,
)
from .energy import EnergyLedger
from .engine import Event, RngStream, SimulationKernel
from .exceptions import SimulationError
from .frame import Frame, RadioParams

_LOGGER = logging.getLogger(__name__)

RadioMode = Literal["idle", "lpl", "rx", "tx"]
ReceiveCallback = Callable[[Frame, int], None]
SentCallback = Callable[[TransmissionRecord, int], None]


class Radio:
    """Radio state machine of one node."""

    def __init__(
        self,
        address: int,
        kernel: SimulationKernel,
        channel: Channel,
        params: RadioParams,
        ledger: EnergyLedger,
        rng: RngStream,
        always_on: bool = False,
        lpl_model: str = "averaged",
    ) -> None:
        """Initialize the radio and attach it to the channel.

        Args:
            address: Node address
            kernel: Simulation kernel
            channel: Shared medium
            params: Radio parameters
            ledger: Energy ledger driven by this radio's driver calls
            rng: Node stream, used once for the duty-cycle phase unless
                the radio is always on
            always_on: Listen continuously instead of low-power listening
            lpl_model: ``averaged`` or ``alternating`` sniff accounting
        """
        self.address = address
        self.kernel = kernel
        self.channel = channel
        self.params = params
        self.ledger = ledger
        self.always_on = always_on
        self.alternating = lpl_model == LPL_ALTERNATING
        self.phase_us = 0 if always_on else rng.integers(0, params.cycle_us - 1)
        self.mode: RadioMode = "idle"
        self.locked: TransmissionRecord | None = None
        self.tx_pending = False
        self.on_receive: ReceiveCallback | None = None
        self.on_sent: SentCallback | None = None
        self._target = f"node:{address}"
        self._sniff_event: Event | None = None
        self._sniff_end_event: Event | None = None
        self._window_end: int | None = None
        self._header_event: Event | None = None
        self._resume_event: Event | None = None
        self._linger_until = 0
        channel.attach(self)

    # Driver calls

    def _call(self, call: str, now: int) -> None:
        self.ledger.on_transition(call, now)

    def start(self, now: int) -> None:
        """Power up: continuous RX for always-on radios, LPL otherwise."""
        if self.always_on:
            self._enter_rx(now)
        else:
            self._enter_lpl(now)

    def hold_rx(self, now: int) -> None:
        """Suspend low-power listening while a transmission is pending."""
        self.tx_pending = True
        if self.mode != "tx" and self.locked is None:
            self._enter_rx(now)

    def release_rx(self, now: int) -> None:
        """Allow low-power listening again."""
        self.tx_pending = False
        self._settle(now)

    def transmit(self, frame: Frame, now: int) -> TransmissionRecord:
        """Switch to TX and put the frame on the channel."""
        if self.mode == "tx":
            raise SimulationError(f"Node {self.address} is already transmitting")
        if self.locked is not None:
            # a frame that started at this very instant is abandoned
            self.locked = None
            self.kernel.cancel(self._header_event)
        self._cancel_duty_cycle()
        self._call(CALL_SEND, now)
        self.mode = "tx"
        return self.channel.begin_transmission(self.address, frame, now)

    # Channel callbacks

    def on_frame_start(self, record: TransmissionRecord, now: int) -> None:
        """Lock onto a new frame if the receiver is listening."""
        if record.is_jam or self.mode == "tx" or self.locked is not None:
            return
        if self.mode == "rx":
            self._lock(record, now)
        elif self.mode == "lpl" and self._window_end is not None and now < self._window_end:
            self._wake(now)
            self._lock(record, now)

    def is_locked_to(self, record: TransmissionRecord) -> bool:
        """Whether the receiver is synchronized to the record."""
        return self.locked is record

    def on_tx_done(self, record: TransmissionRecord, now: int) -> None:
        """The own frame left the air."""
        self._call(CALL_TX_DONE, now)
        self.mode = "idle"
        if self.on_sent is not None:
            self.on_sent(record, now)
        self._settle(now)

    def end_reception(
        self, record: TransmissionRecord, now: int, delivered: bool
    ) -> None:
        """A frame the receiver was locked to ended."""
        self.locked = None
        self.kernel.cancel(self._header_event)
        self._header_event = None
        if delivered:
            self._call(CALL_PACKET_RECEIVED, now)
            self.mode = "idle"
            if self.on_receive is not None:
                self.on_receive(record.frame, now)
        self._settle(now)

    # Internal state handling

    def _lock(self, record: TransmissionRecord, now: int) -> None:
        self.locked = record
        self.mode = "rx"
        if self.kernel.cancel(self._resume_event):
            self._resume_event = None
        dst = record.frame.dst
        if dst not in (self.address, BROADCAST_ADDRESS):
            self._header_event = self.kernel.schedule_at(
                max(record.header_end, now),
                self._target,
                "header-discard",
                lambda t, r=record: self._discard(r, t),
            )

    def _discard(self, record: TransmissionRecord, now: int) -> None:
        """Abandon a frame addressed to someone else."""
        self._header_event = None
        if self.locked is not record:
            return
        self.locked = None
        hold = self.params.lpl_resume_hold_us
        if hold > 0:
            self._linger_until = max(self._linger_until, record.end + hold)
        self._settle(now)

    def _wake(self, now: int) -> None:
        """Leave the duty cycle for continuous RX."""
        self._cancel_duty_cycle()
        if self.ledger.state != STATE_RX:
            self._call(CALL_LISTEN, now)
        self.mode = "rx"

    def _enter_rx(self, now: int) -> None:
        self._cancel_duty_cycle()
        if self.ledger.state in (STATE_IDLE, STATE_SLEEP_LPL):
            self._call(CALL_LISTEN, now)
        self.mode = "rx"
        if self.locked is None:
            record = self._preamble_on_air(now)
            if record is not None:
                self._lock(record, now)

    def _enter_lpl(self, now: int) -> None:
        if self.kernel.cancel(self._resume_event):
            self._resume_event = None
        if self.ledger.state in (STATE_IDLE, STATE_RX):
            self._call(CALL_LOW_POWER_LISTEN, now)
        self.mode = "lpl"
        self._window_end = None
        cycle = self.params.cycle_us
        next_sniff = now + (self.phase_us - now) % cycle
        self._schedule_sniff(next_sniff)

    def _settle(self, now: int) -> None:
        """Pick the listening mode after reception, discard or TX."""
        if self.mode == "tx" or self.locked is not None:
            return
        if self.tx_pending or self.always_on:
            if self.mode != "rx":
                self._enter_rx(now)
            return
        if self.mode == "lpl":
            return
        if now < self._linger_until:
            if self.mode != "rx":
                self._enter_rx(now)
            if self.locked is None:
                self._schedule_resume()
            return
        self._enter_lpl(now)

    def _schedule_resume(self) -> None:
        event = self._resume_event
        if event is not None and event.due == self._linger_until:
            return
        self.kernel.cancel(self._resume_event)
        self._resume_event = self.kernel.schedule_at(
            self._linger_until, self._target, "lpl-resume", self._resume_lpl
        )

    def _resume_lpl(self, now: int) -> None:
        self._resume_event = None
        if self.locked is not None or self.tx_pending or self.mode != "rx":
            return
        if now < self._linger_until:
            self._schedule_resume()
            return
        self._enter_lpl(now)

    def _preamble_on_air(self, now: int) -> TransmissionRecord | None:
        """First foreign record whose preamble portion contains ``now``."""
        for record in self.channel.active_records():
            if (
                not record.is_jam
                and record.sender != self.address
                and record.start <= now < record.preamble_end
            ):
                return record
        return None

    def _schedule_sniff(self, due: int) -> None:
        self._sniff_event = self.kernel.schedule_at(
            due, self._target, "sniff", self._sniff
        )

    def _cancel_duty_cycle(self) -> None:
        self.kernel.cancel(self._sniff_event)
        self.kernel.cancel(self._sniff_end_event)
        self._sniff_event = None
        self._sniff_end_event = None
        self._window_end = None

    def _sniff(self, now: int) -> None:
        """Sniff window start of the duty cycle."""
        self._sniff_event = None
        if self.alternating:
            self._call(CALL_SNIFF_START, now)
        record = self._preamble_on_air(now)
        if record is not None:
            self._wake(now)
            self._lock(record, now)
            return
        self._window_end = now + self.params.sniff_on_us
        if self.alternating:
            self._sniff_end_event = self.kernel.schedule_at(
                self._window_end, self._target, "sniff-end", self._sniff_end
            )
        self._schedule_sniff(now + self.params.cycle_us)

    def _sniff_end(self, now: int) -> None:
        self._sniff_end_event = None
        self._window_end = None
        if self.mode == "lpl" and self.ledger.state == STATE_RX:
            self._call(CALL_SNIFF_END, now)

    @property
    def listening_continuously(self) -> bool:
        """Whether LPL is currently suspended."""
        return self.mode == "rx" and self.ledger.state == STATE_RX

    @property
    def asleep(self) -> bool:
        """Whether the radio is in the low-power duty cycle."""
        return self.mode == "lpl" and self.ledger.state in (STATE_SLEEP_LPL, STATE_RX)
