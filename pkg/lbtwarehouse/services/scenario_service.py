"""Scenario Service - Built-in scripted scenarios.

``deferral_timeline`` replays three devices that defer behind a jammer
with forced ``t_PS`` draws. ``aloha_sweep`` measures pure-ALOHA channel
utilisation under Poisson offered load.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

from ..channel import Channel, ChannelTrace, JamInterval
from ..const import AP_ADDRESS, FRAME_REPLY, MODE_ALOHA, PREAMBLE_NORMAL
from ..energy import EnergyDfaModel, EnergyLedger, EnergyParams
from ..engine import RandomStreams, ScriptedStream, SimulationKernel
from ..frame import Frame, RadioParams, airtime
from ..mac import LbtMac, MacLogEntry, MacParams
from ..radio import Radio

_LOGGER = logging.getLogger(__name__)

# Forced t_PS draws per device and contention round, in microseconds
DEFERRAL_DRAWS: Dict[int, List[int]] = {
    1: [1_000],
    2: [3_000, 500],
    3: [4_000, 2_000, 2_500],
}
DEFERRAL_JAM = JamInterval(0, 20_000)
DEFERRAL_REQUESTS_US = {1: 2_000, 2: 4_000, 3: 6_000}
DEFERRAL_PAYLOAD = 20

ALOHA_SENDERS = 64
ALOHA_FRAME_TIMES = 20_000
DEFAULT_ALOHA_LOADS = (0.1, 0.25, 0.4, 0.5, 0.6, 0.75, 1.0, 1.5, 2.0)


@dataclass
class DeferralTimeline:
    """Outcome of the scripted deferral scenario."""

    jam_end: int
    accesses: List[int]
    frame_ends: List[int]
    offsets: List[int]
    trace: ChannelTrace
    mac_log: List[MacLogEntry] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary."""
        return {
            "jam_end": self.jam_end,
            "accesses": self.accesses,
            "frame_ends": self.frame_ends,
            "offsets": self.offsets,
        }


def aloha_analytic(load: float) -> float:
    """Pure ALOHA utilisation ``G * exp(-2G)``."""
    return load * math.exp(-2 * load)


class ScenarioService:
    """Service for the built-in scripted scenarios."""

    def __init__(
        self,
        radio: Optional[RadioParams] = None,
        energy: Optional[EnergyParams] = None,
    ):
        """Initialize scenario service."""
        self.radio = radio or RadioParams()
        self.energy_model = EnergyDfaModel.from_params(energy or EnergyParams())

    def _station(
        self,
        address: int,
        kernel: SimulationKernel,
        channel: Channel,
        params: MacParams,
        rng: Any,
        mac_log: List[MacLogEntry],
    ) -> LbtMac:
        ledger = EnergyLedger(self.energy_model, address)
        radio = Radio(address, kernel, channel, self.radio, ledger, rng, always_on=True)
        radio.start(kernel.now)
        return LbtMac(address, kernel, channel, radio, params, rng, mac_log)

    def deferral_timeline(
        self, draws: Optional[Dict[int, List[int]]] = None
    ) -> DeferralTimeline:
        """
        Three devices request a transmission while a jammer occupies the channel.

        Every device defers. At jam end each draws a fresh ``t_PS``; the
        smallest ``t_F + t_PS`` wins, the others defer again and redraw when
        the winner's frame ends.

        Args:
            draws: Forced ``t_PS`` draws per device address

        Returns:
            DeferralTimeline with access times and offsets to the preceding
            idle-start
        """
        draws = draws or DEFERRAL_DRAWS
        kernel = SimulationKernel()
        channel = Channel(kernel, self.radio)
        mac_log: List[MacLogEntry] = []
        params = MacParams()
        receiver_rng = ScriptedStream("receiver", [])
        self._station(AP_ADDRESS, kernel, channel, params, receiver_rng, mac_log)
        devices = {}
        for address, values in sorted(draws.items()):
            rng = ScriptedStream(f"device-{address}", values)
            devices[address] = self._station(
                address, kernel, channel, params, rng, mac_log
            )
        channel.jam(DEFERRAL_JAM)
        for address, mac in devices.items():
            frame = Frame(
                kind=FRAME_REPLY,
                src=address,
                dst=AP_ADDRESS,
                payload_len=DEFERRAL_PAYLOAD,
                preamble=PREAMBLE_NORMAL,
            )
            kernel.schedule_at(
                DEFERRAL_REQUESTS_US[address],
                f"device:{address}",
                "request",
                lambda now, m=mac, f=frame: m.request_send(f, now),
            )
        kernel.run_until(DEFERRAL_JAM.end + 200_000)

        frames = [record for record in channel.trace.records if not record.is_jam]
        accesses = [record.start for record in frames]
        ends = [record.end for record in frames]
        idle_starts = [DEFERRAL_JAM.end] + ends[:-1]
        offsets = [access - idle for access, idle in zip(accesses, idle_starts)]
        _LOGGER.info(f"Deferral timeline offsets: {offsets}")
        return DeferralTimeline(
            jam_end=DEFERRAL_JAM.end,
            accesses=accesses,
            frame_ends=ends,
            offsets=offsets,
            trace=channel.trace,
            mac_log=mac_log,
        )

    def aloha_sweep(
        self,
        loads: Sequence[float] = DEFAULT_ALOHA_LOADS,
        seed: int = 1,
        frame_times: int = ALOHA_FRAME_TIMES,
        senders: int = ALOHA_SENDERS,
    ) -> List[Dict[str, Any]]:
        """
        Measure pure-ALOHA utilisation for each offered load.

        Args:
            loads: Offered loads G in frames per frame time
            seed: Seed of the arrival streams
            frame_times: Observation horizon in frame times
            senders: Number of independent Poisson sources

        Returns:
            Rows with offered load, measured and analytic utilisation
        """
        rows = []
        for load in loads:
            rows.append(self._aloha_point(load, seed, frame_times, senders))
            _LOGGER.info(
                f"ALOHA G={load}: S={rows[-1]['utilization']:.4f} "
                f"(analytic {rows[-1]['analytic']:.4f})"
            )
        return rows

    def _aloha_point(
        self, load: float, seed: int, frame_times: int, senders: int
    ) -> Dict[str, Any]:
        if load <= 0:
            raise ValueError(f"Offered load must be positive, got {load}")
        kernel = SimulationKernel()
        channel = Channel(kernel, self.radio)
        streams = RandomStreams(seed)
        params = MacParams(mode=MODE_ALOHA)
        frame_proto = Frame(kind=FRAME_REPLY, src=1, dst=AP_ADDRESS)
        frame_us = airtime(frame_proto, self.radio)
        horizon = frame_times * frame_us
        mean_gap = frame_us * senders / load
        attempts = 0

        def arrival(address: int, mac: LbtMac, rng: Any) -> None:
            def fire(now: int) -> None:
                nonlocal attempts
                # a busy source drops the arrival, the population stays Poisson
                if mac.idle:
                    attempts += 1
                    frame = Frame(kind=FRAME_REPLY, src=address, dst=AP_ADDRESS)
                    mac.request_send(frame, now)
                schedule(now)

            def schedule(now: int) -> None:
                gap = max(1, math.ceil(rng.exponential(mean_gap)))
                if now + gap < horizon:
                    kernel.schedule_at(now + gap, f"source:{address}", "arrival", fire)

            schedule(0)

        for address in range(1, senders + 1):
            rng = streams.stream(f"aloha-{address}")
            mac = self._station(address, kernel, channel, params, rng, [])
            arrival(address, mac, rng)
        kernel.run_until(horizon + frame_us)

        successes = sum(
            1
            for record in channel.trace.records
            if not record.collided and record.end <= horizon
        )
        return {
            "offered_load": load,
            "utilization": successes * frame_us / horizon,
            "analytic": aloha_analytic(load),
            "attempts": attempts,
            "successes": successes,
        }
