"""Warehouse polling application.

An access point broadcasts product polls; nodes holding the polled product
answer with their address and quantity. A run is framed by start and stop
broadcasts: nodes reset their statistics and energy ledger on start and
freeze them on stop.
"""

from __future__ import annotations

import logging
from collections import Counter, deque
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Literal

from .channel import Channel, ChannelTrace, TransmissionRecord
from .config import ScenarioConfig
from .const import (
    AP_ADDRESS,
    BROADCAST_ADDRESS,
    COLLECTION_IN_BAND,
    FRAME_POLL,
    FRAME_REPLY,
    FRAME_START,
    FRAME_STOP,
    FRAME_UNICAST,
    MAX_ADDRESS,
    SCENARIO_STREAM,
    STATS_PAYLOAD_LEN,
)
from .energy import EnergyDfaModel, EnergyLedger, EnergyLogEntry
from .engine import (
    Event,
    KernelCounters,
    RandomStreams,
    RngStream,
    SimulationKernel,
    node_stream_id,
)
from .exceptions import SimulationError
from .frame import Frame
from .mac import LbtMac, MacLogEntry
from .models import ResultRow
from .radio import Radio

_LOGGER = logging.getLogger(__name__)

RequestPurpose = Literal["delivery", "stats"]

# Extra virtual time after the stop request for the stop broadcast to air
STOP_DRAIN_US = 1_000_000
# Upper bound for in-band collection after the stop broadcast
COLLECTION_HORIZON_US = 60_000_000


@dataclass
class Inventory:
    """Goods stored in a node's container."""

    product: int
    quantity: int


@dataclass
class NodeStats:
    """Counters a node keeps between start and stop."""

    address: int
    active: bool
    n_tx: int = 0
    rx_framed: int = 0
    rx_raw: int = 0
    polls_received: int = 0
    replies_received: int = 0
    deliveries: int = 0
    energy_pj: int = 0
    started: bool = False
    stopped: bool = False

    @property
    def energy_mj(self) -> float:
        """Frozen energy in millijoules."""
        return self.energy_pj / 1e9

    def to_dict(self) -> dict[str, Any]:
        """Convert to dictionary."""
        result = asdict(self)
        result["energy_mj"] = self.energy_mj
        return result


@dataclass
class RunStats:
    """Per-node statistics of one run plus the AP's reception count."""

    seed: int
    active: tuple[int, ...]
    nodes: dict[int, NodeStats] = field(default_factory=dict)
    n_rx: int = 0
    polls_sent: int = 0

    @property
    def n_active(self) -> int:
        """Size of the active set."""
        return len(self.active)

    @property
    def run_id(self) -> str:
        """Stable identifier of the run."""
        return f"n{self.n_active}-s{self.seed}"

    def sum_n_tx(self) -> int:
        """Reply frames aired by the active set."""
        return sum(self.nodes[address].n_tx for address in self.active)

    def active_energies_pj(self) -> list[int]:
        """Frozen energy of every active node, by address."""
        return [self.nodes[address].energy_pj for address in sorted(self.active)]

    def to_row(self) -> ResultRow:
        """Summary row for ``results.csv``."""
        return ResultRow.from_energies(
            self.n_active,
            self.seed,
            throughput(self),
            self.n_rx,
            self.sum_n_tx(),
            self.active_energies_pj(),
        )


def throughput(stats: RunStats) -> float | None:
    """Received replies at the AP over reply frames aired by the active set.

    Returns:
        float | None: Value in [0, 1], or None when nothing was sent
    """
    sent = stats.sum_n_tx()
    if sent == 0:
        _LOGGER.warning(f"Run {stats.run_id}: no replies sent, throughput undefined")
        return None
    return stats.n_rx / sent


def select_suppliers(replies: list[tuple[int, int]], demand: int) -> list[int]:
    """Greedily pick repliers until their quantities cover the demand.

    Args:
        replies: ``(address, quantity)`` pairs as received; repeated answers
            of the same node count once
        demand: Requested quantity

    Returns:
        list[int]: Chosen addresses, largest stock first
    """
    stock: dict[int, int] = {}
    for address, quantity in replies:
        stock.setdefault(address, quantity)
    chosen: list[int] = []
    covered = 0
    for address, quantity in sorted(stock.items(), key=lambda item: (-item[1], item[0])):
        if covered >= demand:
            break
        if quantity <= 0:
            continue
        chosen.append(address)
        covered += quantity
    if covered < demand:
        _LOGGER.warning(f"Suppliers cover only {covered} of {demand} requested items")
    return chosen


@dataclass
class PendingRequest:
    """A sequence-numbered unicast awaiting its echo."""

    seq: int
    dst: int
    retries_left: int
    timeout_us: int
    purpose: RequestPurpose = "delivery"
    product: int | None = None
    quantity: int | None = None
    attempts: int = 0
    timer: Event | None = None


@dataclass(frozen=True)
class UnicastOutcome:
    """Final result of a unicast request."""

    seq: int
    dst: int
    success: bool
    attempts: int
    purpose: RequestPurpose
    completed_at: int

    def to_dict(self) -> dict[str, Any]:
        """Convert to dictionary."""
        return asdict(self)


class NodeAgent:
    """Application of a container node."""

    def __init__(
        self,
        address: int,
        inventory: Inventory,
        radio: Radio,
        mac: LbtMac,
        ledger: EnergyLedger,
        config: ScenarioConfig,
        active: bool,
    ) -> None:
        self.address = address
        self.inventory = inventory
        self.radio = radio
        self.mac = mac
        self.ledger = ledger
        self.config = config
        self.stats = NodeStats(address, active)
        self.counting = False
        self._delivered_seqs: set[int] = set()
        radio.on_receive = self.on_receive
        mac.on_sent = self.on_sent

    def on_receive(self, frame: Frame, now: int) -> None:
        """Dispatch a frame delivered by the radio."""
        self.stats.rx_raw += 1
        if frame.kind == FRAME_START:
            self.node_on_start(now)
            return
        if self.counting:
            self.stats.rx_framed += 1
        if frame.kind == FRAME_POLL:
            self.node_on_poll(frame, now)
        elif frame.kind == FRAME_STOP:
            self.node_on_stop(now)
        elif frame.kind == FRAME_UNICAST and frame.dst == self.address:
            self._echo(frame, now)

    def node_on_start(self, now: int) -> None:
        """Reset statistics and the energy ledger."""
        self.stats.n_tx = 0
        self.stats.rx_framed = 0
        self.stats.polls_received = 0
        self.stats.deliveries = 0
        self.stats.started = True
        self.counting = True
        self.ledger.reset(now)

    def node_on_poll(self, frame: Frame, now: int) -> None:
        """Answer a poll for the product this node holds."""
        if not self.counting:
            return
        self.stats.polls_received += 1
        if frame.product != self.inventory.product:
            return
        spec = self.config.frames[FRAME_REPLY]
        reply = Frame(
            kind=FRAME_REPLY,
            src=self.address,
            dst=AP_ADDRESS,
            seq=frame.seq,
            payload_len=spec.payload_len,
            preamble=spec.preamble,
            product=self.inventory.product,
            quantity=self.inventory.quantity,
        )
        self.mac.request_send(reply, now, broadcast_reply=True)

    def node_on_stop(self, now: int) -> None:
        """Freeze statistics and energy."""
        if not self.counting:
            return
        self.counting = False
        self.stats.stopped = True
        self.stats.energy_pj = self.ledger.freeze(now)

    def _echo(self, frame: Frame, now: int) -> None:
        if frame.product is not None and frame.seq not in self._delivered_seqs:
            self._delivered_seqs.add(frame.seq)
            if self.counting:
                self.stats.deliveries += 1
        payload = (
            STATS_PAYLOAD_LEN
            if frame.product is None
            else self.config.frames[FRAME_UNICAST].payload_len
        )
        echo = Frame(
            kind=FRAME_UNICAST,
            src=self.address,
            dst=AP_ADDRESS,
            seq=frame.seq,
            payload_len=payload,
            preamble=self.config.frames[FRAME_REPLY].preamble,
            product=frame.product,
            quantity=frame.quantity,
        )
        self.mac.request_send(echo, now)

    def on_sent(self, frame: Frame, record: TransmissionRecord, now: int) -> None:
        """Count aired replies."""
        if frame.kind == FRAME_REPLY and self.counting:
            self.stats.n_tx += 1


class AccessPoint:
    """The gateway issuing polls and collecting replies."""

    def __init__(
        self,
        kernel: SimulationKernel,
        radio: Radio,
        mac: LbtMac,
        ledger: EnergyLedger,
        config: ScenarioConfig,
    ) -> None:
        self.kernel = kernel
        self.radio = radio
        self.mac = mac
        self.ledger = ledger
        self.config = config
        self.address = AP_ADDRESS
        self.counting = False
        self.n_rx = 0
        self.polls_sent = 0
        self.replies_by_node: Counter[int] = Counter()
        self.replies: list[tuple[int, int]] = []
        self.outcomes: list[UnicastOutcome] = []
        self.on_outcome: Callable[[UnicastOutcome], None] | None = None
        self.stop_aired_at: int | None = None
        self.collecting = False
        self._poll_seq = 0
        self._unicast_seq = 0
        self._requests: deque[PendingRequest] = deque()
        self._current: PendingRequest | None = None
        radio.on_receive = self.on_receive
        mac.on_sent = self.on_sent

    @property
    def unicast_idle(self) -> bool:
        """Whether no unicast request is outstanding or waiting."""
        return self._current is None and not self._requests

    def _broadcast(self, kind: str, now: int, seq: int = 0, product: int | None = None) -> None:
        spec = self.config.frames[kind]
        frame = Frame(
            kind=kind,
            src=self.address,
            dst=BROADCAST_ADDRESS,
            seq=seq,
            payload_len=spec.payload_len,
            preamble=spec.preamble,
            product=product,
        )
        self.mac.request_send(frame, now)

    def start_run(self, now: int) -> None:
        """Send the start broadcast."""
        _LOGGER.debug(f"AP start broadcast requested at t={now}")
        self._broadcast(FRAME_START, now)

    def ap_poll(self, product: int, now: int) -> None:
        """Broadcast a poll for a product; broadcasts are never retransmitted."""
        self._poll_seq = (self._poll_seq + 1) % (MAX_ADDRESS + 1)
        self.polls_sent += 1
        self._broadcast(FRAME_POLL, now, seq=self._poll_seq, product=product)

    def stop_run(self, now: int) -> None:
        """Stop counting and send the stop broadcast."""
        self.counting = False
        self._broadcast(FRAME_STOP, now)

    def unicast_request(
        self,
        dst: int,
        now: int,
        purpose: RequestPurpose = "delivery",
        product: int | None = None,
        quantity: int | None = None,
    ) -> PendingRequest:
        """Queue a sequence-numbered unicast with retransmission.

        Args:
            dst: Node address
            now: Current virtual time
            purpose: ``delivery`` request or ``stats`` collection
            product: Product of a delivery request
            quantity: Quantity of a delivery request

        Returns:
            PendingRequest: The queued request; its outcome is appended to
            :attr:`outcomes` once it succeeded or ran out of retries
        """
        if not 1 <= dst < BROADCAST_ADDRESS:
            raise SimulationError(f"Unicast to invalid address {dst}")
        self._unicast_seq = (self._unicast_seq + 1) % (MAX_ADDRESS + 1)
        request = PendingRequest(
            seq=self._unicast_seq,
            dst=dst,
            retries_left=self.config.unicast.retries,
            timeout_us=self.config.unicast.timeout_ms * 1000,
            purpose=purpose,
            product=product,
            quantity=quantity,
        )
        self._requests.append(request)
        if self._current is None:
            self._send_next(now)
        return request

    def _send_next(self, now: int) -> None:
        if not self._requests:
            return
        self._current = self._requests.popleft()
        self._attempt(now)

    def _attempt(self, now: int) -> None:
        request = self._current
        if request is None:
            return
        request.attempts += 1
        spec = self.config.frames[FRAME_UNICAST]
        frame = Frame(
            kind=FRAME_UNICAST,
            src=self.address,
            dst=request.dst,
            seq=request.seq,
            payload_len=spec.payload_len,
            preamble=spec.preamble,
            product=request.product,
            quantity=request.quantity,
        )
        self.mac.request_send(frame, now)

    def _on_timeout(self, now: int) -> None:
        request = self._current
        if request is None:
            return
        request.timer = None
        if request.retries_left > 0:
            request.retries_left -= 1
            _LOGGER.debug(f"Unicast seq {request.seq} to {request.dst} timed out, retrying")
            self._attempt(now)
            return
        self._finish(False, now)

    def _finish(self, success: bool, now: int) -> None:
        request = self._current
        if request is None:
            return
        self.kernel.cancel(request.timer)
        outcome = UnicastOutcome(
            seq=request.seq,
            dst=request.dst,
            success=success,
            attempts=request.attempts,
            purpose=request.purpose,
            completed_at=now,
        )
        if not success:
            _LOGGER.warning(
                f"Unicast {request.purpose} to node {request.dst} failed after "
                f"{request.attempts} attempts"
            )
        self.outcomes.append(outcome)
        self._current = None
        if self.on_outcome is not None:
            self.on_outcome(outcome)
        self._send_next(now)

    def on_receive(self, frame: Frame, now: int) -> None:
        """Count replies and match unicast echoes."""
        if frame.kind == FRAME_REPLY:
            if self.counting:
                self.n_rx += 1
                self.replies_by_node[frame.src] += 1
                self.replies.append((frame.src, frame.quantity or 0))
        elif frame.kind == FRAME_UNICAST:
            request = self._current
            if request is not None and frame.seq == request.seq and frame.src == request.dst:
                self._finish(True, now)

    def on_sent(self, frame: Frame, record: TransmissionRecord, now: int) -> None:
        """Track the framing broadcasts and arm unicast timeouts."""
        if frame.kind == FRAME_START:
            self.counting = True
        elif frame.kind == FRAME_STOP:
            self.stop_aired_at = now
            if self.config.collection == COLLECTION_IN_BAND:
                self.collect_in_band(now)
        elif frame.kind == FRAME_UNICAST:
            request = self._current
            if request is not None and frame.seq == request.seq:
                self.kernel.cancel(request.timer)
                request.timer = self.kernel.schedule_in(
                    request.timeout_us, "ap", "unicast-timeout", self._on_timeout
                )

    def collect_in_band(self, now: int) -> None:
        """Request every node's frozen statistics by unicast."""
        self.collecting = True
        for address in range(1, self.config.node_count + 1):
            self.unicast_request(address, now, purpose="stats")


@dataclass
class RunResult:
    """Everything one simulated run produced."""

    config: ScenarioConfig
    seed: int
    stats: RunStats
    trace: ChannelTrace
    mac_log: list[MacLogEntry]
    energy_log: list[EnergyLogEntry]
    energy_model: EnergyDfaModel
    counters: KernelCounters
    trace_hash: str
    end_time_us: int
    outcomes: list[UnicastOutcome] = field(default_factory=list)
    suppliers: list[int] = field(default_factory=list)

    def to_row(self) -> ResultRow:
        """Summary row for ``results.csv``."""
        return self.stats.to_row()


def choose_active(config: ScenarioConfig, rng: RngStream) -> tuple[int, ...]:
    """Active set of a run: explicit list or a random subset of ``n_active``."""
    if config.active is not None:
        return tuple(sorted(config.active))
    population = list(range(1, config.node_count + 1))
    # partial Fisher-Yates over the scenario stream
    for index in range(config.n_active):
        pick = rng.integers(index, len(population) - 1)
        population[index], population[pick] = population[pick], population[index]
    return tuple(sorted(population[: config.n_active]))


class WarehouseSimulation:
    """Builds the node population of a scenario and drives one run."""

    def __init__(
        self,
        config: ScenarioConfig,
        seed: int,
        streams: RandomStreams | None = None,
    ) -> None:
        """Wire kernel, channel, radios, MACs, ledgers and agents.

        Args:
            config: Scenario
            seed: Run seed
            streams: Random streams, overridable for scripted runs
        """
        self.config = config
        self.seed = seed
        self.streams = streams or RandomStreams(seed)
        self.kernel = SimulationKernel()
        self.channel = Channel(self.kernel, config.radio)
        self.energy_model = EnergyDfaModel.from_params(config.energy, config.lpl_model)
        self.mac_log: list[MacLogEntry] = []
        self.energy_log: list[EnergyLogEntry] = []
        self.active = choose_active(config, self.streams.stream(SCENARIO_STREAM))
        self.suppliers: list[int] = []
        active_set = set(self.active)

        self.ap = self._build_ap()
        self.nodes: dict[int, NodeAgent] = {}
        for address in range(1, config.node_count + 1):
            active = address in active_set
            # inactive nodes hold some other product
            product = config.product if active else config.product + 1
            radio, mac, ledger = self._build_stack(address, always_on=False)
            self.nodes[address] = NodeAgent(
                address,
                Inventory(product, config.quantity),
                radio,
                mac,
                ledger,
                config,
                active,
            )

    def _build_stack(
        self, address: int, always_on: bool
    ) -> tuple[Radio, LbtMac, EnergyLedger]:
        rng = self.streams.stream(node_stream_id(address))
        ledger = EnergyLedger(self.energy_model, address, log=self.energy_log)
        radio = Radio(
            address,
            self.kernel,
            self.channel,
            self.config.radio,
            ledger,
            rng,
            always_on=always_on,
            lpl_model=self.config.lpl_model,
        )
        mac = LbtMac(
            address, self.kernel, self.channel, radio, self.config.mac, rng, self.mac_log
        )
        return radio, mac, ledger

    def _build_ap(self) -> AccessPoint:
        radio, mac, ledger = self._build_stack(AP_ADDRESS, always_on=True)
        return AccessPoint(self.kernel, radio, mac, ledger, self.config)

    def schedule_run(self) -> int:
        """Queue power-up, framing, polls and orders.

        Returns:
            int: Time of the stop request
        """
        config = self.config
        kernel = self.kernel
        self.ap.radio.start(0)
        for agent in self.nodes.values():
            agent.radio.start(0)
        start = config.start_at_ms * 1000
        kernel.schedule_at(start, "ap", "start", self.ap.start_run)
        offsets = config.polls.offsets_us()
        for offset in offsets:
            kernel.schedule_at(
                start + offset,
                "ap",
                "poll",
                lambda now: self.ap.ap_poll(config.product, now),
            )
        if config.order_demand is not None and offsets:
            spacing = config.polls.spacing_ms * 1000
            kernel.schedule_at(
                start + offsets[-1] + spacing // 2, "ap", "order", self._place_order
            )
        stop = start + config.window_ms * 1000
        kernel.schedule_at(stop, "ap", "stop", self.ap.stop_run)
        return stop

    def _place_order(self, now: int) -> None:
        demand = self.config.order_demand or 0
        self.suppliers = select_suppliers(self.ap.replies, demand)
        remaining = demand
        for address in self.suppliers:
            stock = self.nodes[address].inventory.quantity
            take = min(stock, remaining)
            remaining -= take
            self.ap.unicast_request(
                address, now, product=self.config.product, quantity=take
            )

    def run(self) -> RunResult:
        """Execute the scenario and collect the frozen statistics."""
        stop = self.schedule_run()
        end = stop + STOP_DRAIN_US
        self.kernel.run_until(end)
        if self.config.collection == COLLECTION_IN_BAND:
            horizon = stop + COLLECTION_HORIZON_US
            while not (self.ap.collecting and self.ap.unicast_idle) and end < horizon:
                end = min(end + STOP_DRAIN_US, horizon)
                self.kernel.run_until(end)
            if not (self.ap.collecting and self.ap.unicast_idle):
                _LOGGER.warning(f"In-band collection unfinished at t={end}")
        return self._collect(end)

    def _collect(self, now: int) -> RunResult:
        stats = RunStats(seed=self.seed, active=self.active)
        for address, agent in sorted(self.nodes.items()):
            if not agent.stats.stopped:
                _LOGGER.warning(
                    f"Node {address} missed the stop broadcast, freezing at t={now}"
                )
                agent.stats.energy_pj = agent.ledger.freeze(now)
            agent.stats.replies_received = self.ap.replies_by_node.get(address, 0)
            stats.nodes[address] = agent.stats
        stats.n_rx = self.ap.n_rx
        stats.polls_sent = self.ap.polls_sent
        _LOGGER.debug(
            f"Run {stats.run_id}: N_RX={stats.n_rx} sum N_TX={stats.sum_n_tx()} "
            f"events={self.kernel.counters.fired}"
        )
        return RunResult(
            config=self.config,
            seed=self.seed,
            stats=stats,
            trace=self.channel.trace,
            mac_log=self.mac_log,
            energy_log=self.energy_log,
            energy_model=self.energy_model,
            counters=self.kernel.counters,
            trace_hash=self.kernel.trace_hash(),
            end_time_us=now,
            outcomes=list(self.ap.outcomes),
            suppliers=list(self.suppliers),
        )


def run_experiment(
    n_active: int, seed: int, config: ScenarioConfig | None = None
) -> RunStats:
    """Run one framed experiment with ``n_active`` replying nodes.

    Args:
        n_active: Size of the active set, 1..node count
        seed: Run seed
        config: Scenario, defaults apply when omitted

    Returns:
        RunStats: Frozen per-node statistics
    """
    config = (config or ScenarioConfig()).with_overrides(n_active=n_active)
    return WarehouseSimulation(config, seed).run().stats
