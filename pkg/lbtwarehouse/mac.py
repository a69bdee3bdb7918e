"""Listen-before-talk and pure ALOHA channel access.

A node with a pending frame listens for ``t_F``. If it heard nothing since
the frame became pending it transmits right away; once it sensed activity,
every later idle period must last ``t_F + t_PS`` before it may transmit.
Replies to broadcasts first wait a random pre-backoff. A carrier onset
becomes visible to the assessment ``carrier_sense_delay_us`` after the
first bit is on air.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from typing import Any, Callable, Literal

from .channel import CcaDecision, Channel, TransmissionRecord
from .const import (
    DEFAULT_BACKOFF_STEP_US,
    DEFAULT_CARRIER_SENSE_DELAY_US,
    DEFAULT_PRE_BACKOFF_MAX_US,
    DEFAULT_T_F_US,
    DEFAULT_T_PS_MAX_US,
    MODE_ALOHA,
    MODE_LBT,
    PHASE_CCA_COUNTING,
    PHASE_DEFERRED_BUSY,
    PHASE_IDLE,
    PHASE_PRE_BACKOFF,
    PHASE_TRANSMITTING,
    TPS_REDRAW,
    TPS_RETAIN,
)
from .engine import Event, RngStream, SimulationKernel, uniform_step_us
from .exceptions import ConfigError, SimulationError
from .frame import Frame
from .radio import Radio

_LOGGER = logging.getLogger(__name__)

MacPhase = Literal[
    "idle", "pre-backoff", "cca-counting", "deferred-busy", "transmitting"
]
SentCallback = Callable[[Frame, TransmissionRecord, int], None]


@dataclass(frozen=True)
class MacParams:
    """Channel access parameters."""

    t_f_us: int = DEFAULT_T_F_US
    t_ps_max_us: int = DEFAULT_T_PS_MAX_US
    pre_backoff_max_us: int = DEFAULT_PRE_BACKOFF_MAX_US
    backoff_step_us: int = DEFAULT_BACKOFF_STEP_US
    tps_policy: str = TPS_REDRAW
    mode: str = MODE_LBT
    blind_prebackoff: bool = False
    carrier_sense_delay_us: int = DEFAULT_CARRIER_SENSE_DELAY_US

    def __post_init__(self) -> None:
        """Validate the parameter set."""
        if self.t_f_us <= 0:
            raise ConfigError("must be positive", field="mac.t_f_us")
        if self.t_ps_max_us < 0:
            raise ConfigError("must not be negative", field="mac.t_ps_max_us")
        if self.pre_backoff_max_us < 0:
            raise ConfigError("must not be negative", field="mac.pre_backoff_max_us")
        if self.backoff_step_us <= 0:
            raise ConfigError("must be positive", field="mac.backoff_step_us")
        if self.carrier_sense_delay_us < 0:
            raise ConfigError("must not be negative", field="mac.carrier_sense_delay_us")
        if self.tps_policy not in (TPS_REDRAW, TPS_RETAIN):
            raise ConfigError(f"unknown policy {self.tps_policy}", field="mac.tps_policy")
        if self.mode not in (MODE_LBT, MODE_ALOHA):
            raise ConfigError(f"unknown mode {self.mode}", field="mac.mode")

    def to_dict(self) -> dict[str, Any]:
        """Convert to dictionary."""
        return asdict(self)


@dataclass(frozen=True)
class MacLogEntry:
    """One phase transition of a node's MAC."""

    time_us: int
    node: int
    event: str
    from_phase: str
    to_phase: str
    t_ps_us: int | None = None
    window_us: int | None = None

    def to_dict(self) -> dict[str, Any]:
        """Convert to dictionary for CSV export."""
        return asdict(self)


@dataclass
class MacContext:
    """Channel access state of the frame currently pending on a node."""

    phase: MacPhase = PHASE_IDLE
    pending: Frame | None = None
    broadcast_reply: bool = False
    t_ps_us: int = 0
    sensed_activity: bool = False
    cca_start: int = 0


class LbtMac:
    """Per-node medium access controller."""

    def __init__(
        self,
        address: int,
        kernel: SimulationKernel,
        channel: Channel,
        radio: Radio,
        params: MacParams,
        rng: RngStream,
        log: list[MacLogEntry] | None = None,
    ) -> None:
        """Initialize the MAC and subscribe to channel activity.

        Args:
            address: Node address
            kernel: Simulation kernel
            channel: Shared medium
            radio: The node's radio
            params: Access parameters
            rng: Node stream for pre-backoff and t_PS draws
            log: Shared list the MAC appends its phase transitions to
        """
        self.address = address
        self.kernel = kernel
        self.channel = channel
        self.radio = radio
        self.params = params
        self.rng = rng
        self.log = log if log is not None else []
        self.context = MacContext()
        self.on_sent: SentCallback | None = None
        self.frames_sent = 0
        self._queued: tuple[Frame, bool] | None = None
        self._timer: Event | None = None
        self._target = f"mac:{address}"
        radio.on_sent = self.on_tx_done
        channel.subscribe_activity(address, self.on_busy, self.on_idle)
        channel.watch_carrier(self.on_carrier)

    @property
    def idle(self) -> bool:
        """Whether nothing is pending or queued."""
        return self.context.pending is None and self._queued is None

    def _set_phase(
        self,
        phase: MacPhase,
        now: int,
        event: str,
        t_ps_us: int | None = None,
        window_us: int | None = None,
    ) -> None:
        self.log.append(
            MacLogEntry(
                now, self.address, event, self.context.phase, phase, t_ps_us, window_us
            )
        )
        self.context.phase = phase

    def _draw_t_ps(self) -> int:
        return uniform_step_us(self.rng, self.params.t_ps_max_us, self.params.backoff_step_us)

    def request_send(self, frame: Frame, now: int, broadcast_reply: bool = False) -> None:
        """Hand a frame to the MAC.

        Args:
            frame: Frame to transmit
            now: Current virtual time
            broadcast_reply: Apply the broadcast-reply pre-backoff

        Raises:
            SimulationError: If a frame is pending and another one is queued
        """
        if self.context.pending is not None:
            if self._queued is not None:
                raise SimulationError(
                    f"Node {self.address}: TX queue overflow at t={now} ({frame.kind})"
                )
            self._queued = (frame, broadcast_reply)
            return
        self.context = MacContext(pending=frame, broadcast_reply=broadcast_reply)
        if self.params.mode == MODE_ALOHA:
            self.aloha_send(frame, now)
            return
        if self.params.tps_policy == TPS_RETAIN:
            self.context.t_ps_us = self._draw_t_ps()
        if broadcast_reply:
            if not self.params.blind_prebackoff:
                self.radio.hold_rx(now)
            delay = uniform_step_us(
                self.rng, self.params.pre_backoff_max_us, self.params.backoff_step_us
            )
            self._set_phase(PHASE_PRE_BACKOFF, now, "request", window_us=delay)
            self._timer = self.kernel.schedule_in(
                delay, self._target, "pre-backoff-end", self._start_cca
            )
        else:
            self.radio.hold_rx(now)
            self._start_cca(now)

    def _start_cca(self, now: int) -> None:
        self._timer = None
        self.radio.hold_rx(now)
        self.context.cca_start = now
        if self.channel.is_busy(now, self.params.carrier_sense_delay_us):
            self.context.sensed_activity = True
            self._set_phase(PHASE_DEFERRED_BUSY, now, "cca-busy")
            return
        self._count(now, "cca-start")

    def _count(self, now: int, event: str) -> None:
        """Start listening for an idle window."""
        window = self.params.t_f_us
        t_ps = None
        if self.context.sensed_activity:
            if self.params.tps_policy == TPS_REDRAW:
                self.context.t_ps_us = self._draw_t_ps()
            t_ps = self.context.t_ps_us
            window += t_ps
        self.context.cca_start = now
        self._set_phase(PHASE_CCA_COUNTING, now, event, t_ps_us=t_ps, window_us=window)
        self._timer = self.kernel.schedule_in(
            window, self._target, "cca-complete", self._cca_complete
        )

    def on_busy(self, now: int) -> None:
        """Channel-busy-start notification; onsets arrive through :meth:`on_carrier`."""

    def on_carrier(self, now: int) -> None:
        """A record started on the channel."""
        delay = self.params.carrier_sense_delay_us
        if delay == 0:
            self._sense_carrier(now)
            return
        self.kernel.schedule_in(delay, self._target, "carrier-sensed", self._sense_carrier)

    def _sense_carrier(self, now: int) -> None:
        if self.context.phase != PHASE_CCA_COUNTING:
            return
        if self._timer is not None and self._timer.due == now:
            # window closes as the carrier becomes visible: both transmit
            return
        self.kernel.cancel(self._timer)
        self._timer = None
        self.context.sensed_activity = True
        self._set_phase(PHASE_DEFERRED_BUSY, now, "activity")
        if not self.channel.is_busy(now):
            # the carrier already left the air
            self._count(now, "idle-start")

    def on_idle(self, now: int) -> None:
        """Channel-idle-start notification; restart the full listen window."""
        if self.context.phase != PHASE_DEFERRED_BUSY:
            return
        self._count(now, "idle-start")

    def _cca_complete(self, now: int) -> None:
        self._timer = None
        ctx = self.context
        window = now - ctx.cca_start
        self.channel.trace.cca.append(
            CcaDecision(now, self.address, window, ctx.sensed_activity, ctx.t_ps_us)
        )
        self._transmit(now, "cca-clear", window)

    def aloha_send(self, frame: Frame, now: int) -> None:
        """Transmit immediately without carrier sense or backoff."""
        if self.context.pending is None:
            self.context = MacContext(pending=frame)
        self._transmit(now, "aloha")

    def _transmit(self, now: int, event: str, window: int | None = None) -> None:
        frame = self.context.pending
        if frame is None:
            raise SimulationError(f"Node {self.address}: transmit without pending frame")
        self._set_phase(
            PHASE_TRANSMITTING,
            now,
            event,
            t_ps_us=self.context.t_ps_us if self.context.sensed_activity else None,
            window_us=window,
        )
        self.radio.transmit(frame, now)

    def on_tx_done(self, record: TransmissionRecord, now: int) -> None:
        """The radio finished sending the pending frame."""
        frame = self.context.pending
        self._set_phase(PHASE_IDLE, now, "tx-done")
        self.context = MacContext()
        self.frames_sent += 1
        if self._queued is not None:
            queued, broadcast_reply = self._queued
            self._queued = None
            self.request_send(queued, now, broadcast_reply)
        if self.on_sent is not None and frame is not None:
            self.on_sent(frame, record, now)
        if self.idle:
            self.radio.release_rx(now)

    def reset(self, now: int) -> None:
        """Drop the pending frame and queue without transmitting."""
        self.kernel.cancel(self._timer)
        self._timer = None
        self._queued = None
        if self.context.phase != PHASE_TRANSMITTING:
            if self.context.pending is not None:
                self._set_phase(PHASE_IDLE, now, "reset")
            self.context = MacContext()
            self.radio.release_rx(now)
