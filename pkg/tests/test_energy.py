"""Unit tests for the energy DFA, the ledger and the replay oracle."""

import pytest

from lbtwarehouse.energy import (
    EnergyDfaModel,
    EnergyLedger,
    EnergyLogEntry,
    EnergyParams,
    TransitionSpec,
    build_transition_table,
    power_uw,
    replay_energy,
    replay_oracle,
)
from lbtwarehouse.exceptions import EnergyModelError, InvariantViolation

pytestmark = pytest.mark.unit


def _model_with(specs):
    return EnergyDfaModel.from_params(EnergyParams(transitions=tuple(specs)))


class TestPower:
    """Tests for the microwatt arithmetic."""

    def test_default_powers(self, energy_model):
        """Test V x I for the default currents."""
        assert energy_model.power == {
            "SLEEP_LPL": 4_500,
            "RX": 69_000,
            "TX": 135_000,
            "IDLE": 3_000,
        }

    def test_fractional_microwatts_rejected(self):
        """Test a product that is not a whole number of microwatts is an error."""
        with pytest.raises(EnergyModelError):
            power_uw(3_333, 1)


class TestTransitionTable:
    """Tests for DFA construction."""

    def test_duplicate_edge_rejected(self):
        """Test two transitions for one (state, call) make the DFA non-deterministic."""
        with pytest.raises(EnergyModelError):
            build_transition_table(
                [
                    TransitionSpec("IDLE", "listen", "RX"),
                    TransitionSpec("IDLE", "listen", "TX"),
                ]
            )

    def test_undefined_call_raises(self, energy_model):
        """Test a driver call without an edge is a model error."""
        with pytest.raises(EnergyModelError):
            energy_model.step("TX", "listen")

    def test_unknown_call_rejected(self):
        """Test transitions must use known driver calls."""
        with pytest.raises(EnergyModelError):
            _model_with([TransitionSpec("IDLE", "warp", "RX")])


class TestLedger:
    """Tests for online accounting."""

    def test_rx_interval(self, energy_model):
        """Test 1 ms in RX adds 69 000 000 pJ."""
        ledger = EnergyLedger(energy_model, 1)
        ledger.on_transition("listen", 0)

        assert ledger.on_transition("packet_received", 1_000) == 69_000_000

    def test_transition_energy(self):
        """Test a zero-duration step adds exactly its transition energy."""
        model = _model_with([TransitionSpec("IDLE", "listen", "RX", 40_000)])
        ledger = EnergyLedger(model, 1)

        assert ledger.on_transition("listen", 0) == 40_000

    def test_full_run_in_lpl(self, energy_model):
        """Test 11.75 s of averaged LPL gives 52.875 mJ."""
        ledger = EnergyLedger(energy_model, 1)
        ledger.on_transition("low_power_listen", 0)

        assert ledger.freeze(11_750_000) == 52_875_000_000

    def test_reset_then_freeze(self, energy_model):
        """Test an immediate freeze after reset is zero."""
        ledger = EnergyLedger(energy_model, 1)
        ledger.on_transition("listen", 0)
        ledger.reset(5_000)

        assert ledger.freeze(5_000) == 0

    def test_one_second_idle(self, energy_model):
        """Test one second in IDLE is 3 mJ."""
        ledger = EnergyLedger(energy_model, 1)
        ledger.reset(0)

        assert ledger.freeze(1_000_000) == 3_000_000_000

    def test_freeze_is_idempotent(self, energy_model):
        """Test freezing twice returns the same value."""
        ledger = EnergyLedger(energy_model, 1)
        first = ledger.freeze(1_000)

        assert ledger.freeze(9_000) == first

    def test_frozen_ledger_ignores_later_steps(self, energy_model):
        """Test transitions after a freeze do not add energy."""
        ledger = EnergyLedger(energy_model, 1)
        ledger.on_transition("listen", 0)
        frozen = ledger.freeze(1_000)

        ledger.on_transition("send", 2_000)
        ledger.on_transition("tx_done", 9_000)

        assert ledger.accumulated == frozen
        assert ledger.state == "IDLE"

    def test_additivity(self, energy_model):
        """Test a freeze and reset split adds up to the unsplit total."""
        whole = EnergyLedger(energy_model, 1)
        whole.on_transition("listen", 0)
        total = whole.freeze(10_000)

        split = EnergyLedger(energy_model, 2)
        split.on_transition("listen", 0)
        first = split.freeze(4_000)
        split.reset(4_000)
        second = split.freeze(10_000)

        assert first + second == total

    def test_monotone(self, energy_model):
        """Test the accumulated energy never decreases between steps."""
        ledger = EnergyLedger(energy_model, 1)
        values = [
            ledger.on_transition(call, now)
            for call, now in (
                ("low_power_listen", 0),
                ("listen", 4_900),
                ("send", 5_000),
                ("tx_done", 8_000),
                ("listen", 8_000),
                ("packet_received", 12_000),
            )
        ]

        assert values == sorted(values)

    def test_settled_does_not_change_ledger(self, energy_model):
        """Test peeking at the open interval leaves the counter alone."""
        ledger = EnergyLedger(energy_model, 1)
        ledger.on_transition("listen", 0)

        assert ledger.settled(1_000) == 69_000_000
        assert ledger.accumulated == 0


class TestReplayOracle:
    """Tests for recomputation from the log."""

    def test_empty_log(self, energy_model):
        """Test an empty log yields no energy."""
        assert replay_oracle([], energy_model) == {}
        assert replay_energy([], energy_model) == 0

    def test_single_step(self, energy_model):
        """Test one transition replays to P * t + E_tran."""
        log = []
        ledger = EnergyLedger(energy_model, 4, log=log)
        ledger.on_transition("listen", 2_000)

        assert replay_oracle(log, energy_model) == {4: 3_000 * 2_000}

    def test_matches_online_ledgers(self, energy_model):
        """Test replay equals the online ledger for interleaved nodes."""
        log = []
        first = EnergyLedger(energy_model, 1, log=log)
        second = EnergyLedger(energy_model, 2, log=log)
        first.on_transition("low_power_listen", 0)
        second.on_transition("listen", 10)
        first.reset(100)
        second.on_transition("send", 300)
        first.on_transition("listen", 4_900)
        second.on_transition("tx_done", 3_634)
        first.freeze(10_000)
        second.freeze(10_000)

        assert replay_oracle(log, energy_model) == {
            1: first.accumulated,
            2: second.accumulated,
        }

    def test_tampered_log_detected(self, energy_model):
        """Test a modified accumulated value is reported."""
        log = []
        ledger = EnergyLedger(energy_model, 1, log=log)
        ledger.on_transition("listen", 0)
        ledger.on_transition("packet_received", 1_000)
        entry = log[-1]
        log[-1] = EnergyLogEntry(
            entry.time_us,
            entry.node,
            entry.kind,
            entry.call,
            entry.from_state,
            entry.to_state,
            entry.accumulated_pj + 1,
        )

        with pytest.raises(InvariantViolation):
            replay_oracle(log, energy_model)
