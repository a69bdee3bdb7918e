"""DFA based radio energy accounting.

Every driver call that changes the radio state moves a deterministic
automaton. Each state carries an average power in microwatts and each
transition a fixed energy in picojoules; the ledger adds
``P_state * t_state + E_tran`` after every transition. Microwatts times
microseconds are picojoules, so all bookkeeping stays in exact integers.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Any, Iterable, Literal

from .const import (
    ALTERNATING_TRANSITIONS,
    DEFAULT_I_IDLE_UA,
    DEFAULT_I_LPL_AVG_UA,
    DEFAULT_I_RX_UA,
    DEFAULT_I_SLEEP_UA,
    DEFAULT_I_TX_UA,
    DEFAULT_TRANSITIONS,
    DEFAULT_VOLTAGE_MV,
    DRIVER_CALLS,
    ENERGY_STATES,
    LPL_ALTERNATING,
    LPL_AVERAGED,
    STATE_IDLE,
    STATE_RX,
    STATE_SLEEP_LPL,
    STATE_TX,
)
from .exceptions import EnergyModelError, InvariantViolation

_LOGGER = logging.getLogger(__name__)

LedgerEntryKind = Literal["transition", "reset", "freeze"]


@dataclass(frozen=True)
class TransitionSpec:
    """One DFA edge with its transition energy."""

    from_state: str
    call: str
    to_state: str
    energy_pj: int = 0


@dataclass(frozen=True)
class EnergyParams:
    """Supply voltage, per-state currents and per-transition energies."""

    voltage_mv: int = DEFAULT_VOLTAGE_MV
    i_rx_ua: int = DEFAULT_I_RX_UA
    i_lpl_avg_ua: int = DEFAULT_I_LPL_AVG_UA
    i_tx_ua: int = DEFAULT_I_TX_UA
    i_idle_ua: int = DEFAULT_I_IDLE_UA
    i_sleep_ua: int = DEFAULT_I_SLEEP_UA
    transitions: tuple[TransitionSpec, ...] = tuple(
        TransitionSpec(src, call, dst) for src, call, dst in DEFAULT_TRANSITIONS
    )

    def to_dict(self) -> dict[str, Any]:
        """Convert to dictionary for the run metadata."""
        result = asdict(self)
        result["transitions"] = [asdict(spec) for spec in self.transitions]
        return result


def power_uw(voltage_mv: int, current_ua: int) -> int:
    """Exact power in microwatts for a voltage and a current.

    Raises:
        EnergyModelError: If the product is not a whole number of microwatts
    """
    nanowatts = voltage_mv * current_ua
    if nanowatts % 1000:
        raise EnergyModelError(
            f"{voltage_mv} mV x {current_ua} uA is not a whole number of microwatts"
        )
    return nanowatts // 1000


@dataclass
class EnergyDfaModel:
    """State powers (uW) and the transition table of the radio DFA."""

    power: dict[str, int]
    transitions: dict[tuple[str, str], tuple[str, int]] = field(default_factory=dict)
    lpl_model: str = LPL_AVERAGED

    def __post_init__(self) -> None:
        """Validate the model."""
        for state, value in self.power.items():
            if state not in ENERGY_STATES:
                raise EnergyModelError(f"Unknown energy state: {state}")
            if value < 0:
                raise EnergyModelError(f"Negative power for {state}: {value}")
        for (state, call), (to_state, energy) in self.transitions.items():
            if call not in DRIVER_CALLS:
                raise EnergyModelError(f"Unknown driver call: {call}")
            if state not in self.power or to_state not in self.power:
                raise EnergyModelError(f"Transition {state} --{call}--> {to_state}")
            if energy < 0:
                raise EnergyModelError(f"Negative transition energy on {state}/{call}")

    @classmethod
    def from_params(
        cls, params: EnergyParams, lpl_model: str = LPL_AVERAGED
    ) -> "EnergyDfaModel":
        """Build the model from supply voltage and currents.

        Args:
            params: Electrical parameters and transition table
            lpl_model: ``averaged`` keeps SLEEP_LPL at the averaged LPL current,
                ``alternating`` uses the sleep current and adds sniff edges

        Returns:
            EnergyDfaModel: Deterministic model
        """
        sleep_current = (
            params.i_sleep_ua if lpl_model == LPL_ALTERNATING else params.i_lpl_avg_ua
        )
        power = {
            STATE_SLEEP_LPL: power_uw(params.voltage_mv, sleep_current),
            STATE_RX: power_uw(params.voltage_mv, params.i_rx_ua),
            STATE_TX: power_uw(params.voltage_mv, params.i_tx_ua),
            STATE_IDLE: power_uw(params.voltage_mv, params.i_idle_ua),
        }
        specs = list(params.transitions)
        if lpl_model == LPL_ALTERNATING:
            present = {(spec.from_state, spec.call) for spec in specs}
            specs.extend(
                TransitionSpec(src, call, dst)
                for src, call, dst in ALTERNATING_TRANSITIONS
                if (src, call) not in present
            )
        return cls(power=power, transitions=build_transition_table(specs), lpl_model=lpl_model)

    def step(self, state: str, call: str) -> tuple[str, int]:
        """Return ``(to_state, E_tran)`` for a driver call.

        Raises:
            EnergyModelError: If the DFA has no such edge
        """
        try:
            return self.transitions[(state, call)]
        except KeyError:
            raise EnergyModelError(
                f"No transition for driver call '{call}' in state {state}"
            ) from None


def build_transition_table(
    specs: Iterable[TransitionSpec],
) -> dict[tuple[str, str], tuple[str, int]]:
    """Index transition specs by ``(state, call)``, rejecting duplicates."""
    table: dict[tuple[str, str], tuple[str, int]] = {}
    for spec in specs:
        key = (spec.from_state, spec.call)
        if key in table:
            raise EnergyModelError(
                f"Non-deterministic DFA: two transitions for {spec.call} in {spec.from_state}"
            )
        table[key] = (spec.to_state, spec.energy_pj)
    return table


@dataclass(frozen=True)
class EnergyLogEntry:
    """One step of a node's ledger, in the order it was applied."""

    time_us: int
    node: int
    kind: LedgerEntryKind
    call: str = ""
    from_state: str = ""
    to_state: str = ""
    accumulated_pj: int = 0

    def to_dict(self) -> dict[str, Any]:
        """Convert to dictionary for CSV export."""
        return asdict(self)


class EnergyLedger:
    """Online energy counter of one node's radio."""

    def __init__(
        self,
        model: EnergyDfaModel,
        node: int,
        now: int = 0,
        initial_state: str = STATE_IDLE,
        log: list[EnergyLogEntry] | None = None,
    ) -> None:
        """Initialize the ledger.

        Args:
            model: Energy DFA shared by all nodes of a run
            node: Node address, used to tag log entries
            now: Entry time of the initial state
            initial_state: DFA state the radio starts in
            log: Shared list the ledger appends its steps to
        """
        self.model = model
        self.node = node
        self.state = initial_state
        self.entry_time = now
        self.accumulated = 0
        self.frozen = False
        self.log = log if log is not None else []

    def on_transition(self, call: str, now: int) -> int:
        """Apply a driver call.

        Args:
            call: Driver call name
            now: Current virtual time

        Returns:
            int: Accumulated energy in pJ
        """
        to_state, energy = self.model.step(self.state, call)
        if not self.frozen:
            self.accumulated += self.model.power[self.state] * (now - self.entry_time)
            self.accumulated += energy
        self.log.append(
            EnergyLogEntry(
                now, self.node, "transition", call, self.state, to_state, self.accumulated
            )
        )
        self.state = to_state
        self.entry_time = now
        return self.accumulated

    def reset(self, now: int) -> int:
        """Zero the counter and restart accounting at ``now``."""
        self.accumulated = 0
        self.entry_time = now
        self.frozen = False
        self.log.append(EnergyLogEntry(now, self.node, "reset", to_state=self.state))
        return 0

    def freeze(self, now: int) -> int:
        """Settle the open state interval and stop accounting.

        Returns:
            int: Frozen total in pJ
        """
        if not self.frozen:
            self.accumulated += self.model.power[self.state] * (now - self.entry_time)
            self.entry_time = now
            self.frozen = True
        self.log.append(
            EnergyLogEntry(
                now, self.node, "freeze", to_state=self.state, accumulated_pj=self.accumulated
            )
        )
        return self.accumulated

    def settled(self, now: int) -> int:
        """Total including the open interval, without changing the ledger."""
        if self.frozen:
            return self.accumulated
        return self.accumulated + self.model.power[self.state] * (now - self.entry_time)


def replay_energy(
    entries: Iterable[EnergyLogEntry],
    model: EnergyDfaModel,
    initial_state: str = STATE_IDLE,
    start_time: int = 0,
) -> int:
    """Recompute one node's energy by folding the formula over its log.

    Raises:
        InvariantViolation: On the first step whose recorded online total
            differs from the recomputed one
    """
    state = initial_state
    entry_time = start_time
    total = 0
    frozen = False
    for item in entries:
        if item.kind == "reset":
            total = 0
            entry_time = item.time_us
            frozen = False
            continue
        if item.kind == "freeze":
            if not frozen:
                total += model.power[state] * (item.time_us - entry_time)
                entry_time = item.time_us
                frozen = True
        else:
            to_state, energy = model.step(state, item.call)
            if to_state != item.to_state or state != item.from_state:
                raise InvariantViolation(
                    f"Node {item.node}: logged {item.from_state} --{item.call}--> "
                    f"{item.to_state} but replay is in {state} -> {to_state}",
                    item,
                )
            if not frozen:
                total += model.power[state] * (item.time_us - entry_time) + energy
            state = to_state
            entry_time = item.time_us
        if total != item.accumulated_pj:
            raise InvariantViolation(
                f"Node {item.node}: replay {total} pJ != online {item.accumulated_pj} pJ "
                f"at t={item.time_us} ({item.kind} {item.call})",
                item,
            )
    return total


def replay_oracle(
    log: Iterable[EnergyLogEntry],
    model: EnergyDfaModel,
    initial_state: str = STATE_IDLE,
) -> dict[int, int]:
    """Recompute energy per node from a complete transition log.

    Returns:
        dict[int, int]: Node address to energy in pJ, up to each node's last entry
    """
    per_node: dict[int, list[EnergyLogEntry]] = {}
    for item in log:
        per_node.setdefault(item.node, []).append(item)
    return {
        node: replay_energy(entries, model, initial_state)
        for node, entries in sorted(per_node.items())
    }
