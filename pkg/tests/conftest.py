"""Shared fixtures for the simulator tests."""

from typing import Callable, List, Optional

import pytest

from lbtwarehouse.channel import Channel
from lbtwarehouse.const import AP_ADDRESS, FRAME_REPLY, PREAMBLE_NORMAL
from lbtwarehouse.energy import EnergyDfaModel, EnergyLedger, EnergyLogEntry, EnergyParams
from lbtwarehouse.engine import RngStream, ScriptedStream, SimulationKernel
from lbtwarehouse.frame import Frame, RadioParams
from lbtwarehouse.mac import LbtMac, MacLogEntry, MacParams
from lbtwarehouse.radio import Radio


class Station:
    """Radio, MAC and ledger of one test node."""

    def __init__(self, address: int, radio: Radio, mac: LbtMac, ledger: EnergyLedger):
        self.address = address
        self.radio = radio
        self.mac = mac
        self.ledger = ledger
        self.received: List[tuple] = []
        radio.on_receive = lambda frame, now: self.received.append((frame, now))


@pytest.fixture
def kernel() -> SimulationKernel:
    """Fresh kernel at t=0."""
    return SimulationKernel()


@pytest.fixture
def radio_params() -> RadioParams:
    """Default radio parameters without the post-discard RX hold."""
    return RadioParams(lpl_resume_hold_us=0)


@pytest.fixture
def channel(kernel, radio_params) -> Channel:
    """Idle channel on the fixture kernel."""
    return Channel(kernel, radio_params)


@pytest.fixture
def energy_model() -> EnergyDfaModel:
    """Default averaged energy model."""
    return EnergyDfaModel.from_params(EnergyParams())


@pytest.fixture
def energy_log() -> List[EnergyLogEntry]:
    """Shared energy log of the fixture stations."""
    return []


@pytest.fixture
def mac_log() -> List[MacLogEntry]:
    """Shared MAC log of the fixture stations."""
    return []


@pytest.fixture
def make_station(
    kernel, channel, radio_params, energy_model, energy_log, mac_log
) -> Callable[..., Station]:
    """Factory for stations attached to the fixture channel."""

    def factory(
        address: int,
        draws: Optional[List[int]] = None,
        always_on: bool = True,
        mac_params: Optional[MacParams] = None,
        seed: int = 1,
        lpl_model: str = "averaged",
    ) -> Station:
        if draws is not None:
            rng: RngStream = ScriptedStream(f"test-{address}", draws)
        else:
            rng = RngStream(seed, f"node-{address}")
        ledger = EnergyLedger(energy_model, address, log=energy_log)
        radio = Radio(
            address,
            kernel,
            channel,
            radio_params,
            ledger,
            rng,
            always_on=always_on,
            lpl_model=lpl_model,
        )
        mac = LbtMac(
            address,
            kernel,
            channel,
            radio,
            mac_params or MacParams(carrier_sense_delay_us=0),
            rng,
            mac_log,
        )
        radio.start(kernel.now)
        return Station(address, radio, mac, ledger)

    return factory


@pytest.fixture
def reply_frame() -> Callable[[int], Frame]:
    """Normal-preamble frame from a node to the AP."""

    def factory(src: int, payload_len: int = 2) -> Frame:
        return Frame(
            kind=FRAME_REPLY,
            src=src,
            dst=AP_ADDRESS,
            payload_len=payload_len,
            preamble=PREAMBLE_NORMAL,
        )

    return factory
