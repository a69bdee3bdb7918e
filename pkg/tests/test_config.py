"""Unit tests for scenario and energy parameter files."""

from textwrap import dedent

import pytest

from lbtwarehouse.config import (
    PollSchedule,
    ScenarioConfig,
    load_energy_params,
    load_scenario,
    scenario_from_dict,
)
from lbtwarehouse.exceptions import ConfigError

pytestmark = pytest.mark.unit


@pytest.fixture
def write_yaml(tmp_path):
    """Write a YAML document into the temporary directory."""

    def writer(text, name="scenario.yaml"):
        path = tmp_path / name
        path.write_text(dedent(text).lstrip("\n"), encoding="utf-8")
        return path

    return writer


class TestScenarioConfig:
    """Tests for the resolved scenario."""

    def test_defaults(self):
        """Test the default scenario."""
        config = ScenarioConfig()

        assert config.node_count == 38
        assert config.n_active == 38
        assert config.polls.offsets_us()[0] == 500_000
        assert config.polls.offsets_us()[-1] == 9_500_000
        assert config.window_ms == 11_750
        assert config.frames["poll"].preamble == "extended"
        assert config.frames["reply"].preamble == "normal"

    def test_active_list_sets_size(self):
        """Test an explicit active list determines n_active."""
        config = ScenarioConfig(node_count=5, active=(2, 4))

        assert config.n_active == 2

    @pytest.mark.parametrize("active", [(), (1, 1), (0,), (6,)])
    def test_invalid_active_list(self, active):
        """Test empty, duplicate and out-of-range active lists are rejected."""
        with pytest.raises(ConfigError) as err:
            ScenarioConfig(node_count=5, active=active)

        assert err.value.field == "active"

    def test_n_active_above_node_count(self):
        """Test n_active may not exceed the population."""
        with pytest.raises(ConfigError):
            ScenarioConfig(node_count=5, n_active=6)

    def test_poll_outside_window(self):
        """Test the last poll must fall inside the window."""
        with pytest.raises(ConfigError) as err:
            ScenarioConfig(polls=PollSchedule(count=20))

        assert err.value.field == "polls"

    def test_overrides_forward_mac_fields(self):
        """Test mode and policy overrides land in the MAC parameters."""
        config = ScenarioConfig().with_overrides(mode="aloha", tps_policy="retain", seed=None)

        assert config.mac.mode == "aloha"
        assert config.mac.tps_policy == "retain"
        assert config.seed == 1

    def test_n_active_override_clears_active_list(self):
        """Test overriding n_active replaces an explicit active list."""
        config = ScenarioConfig(node_count=5, active=(1, 2)).with_overrides(n_active=4)

        assert config.active is None
        assert config.n_active == 4

    def test_to_dict(self):
        """Test converting the scenario to a dictionary."""
        data = ScenarioConfig(node_count=4, active=(3,)).to_dict()

        assert data["active"] == [3]
        assert data["mac"]["t_f_us"] == 5_000
        assert data["energy"]["transitions"][0]["from_state"] == "IDLE"


class TestLoadScenario:
    """Tests for reading scenario files."""

    def test_minimal_file(self, write_yaml):
        """Test a small scenario file."""
        path = write_yaml(
            """
            node_count: 10
            n_active: 3
            seed: 99
            mode: lbt
            polls:
              count: 2
            """
        )

        config = load_scenario(path)

        assert config.node_count == 10
        assert config.n_active == 3
        assert config.seed == 99
        assert config.polls.count == 2
        assert config.source == str(path)

    def test_sensing_and_hold_knobs(self, write_yaml):
        """Test the carrier-sense delay and the post-discard hold load from YAML."""
        path = write_yaml(
            """
            radio:
              lpl_resume_hold_us: 0
            mac:
              carrier_sense_delay_us: 0
            """
        )

        config = load_scenario(path)

        assert config.radio.lpl_resume_hold_us == 0
        assert config.mac.carrier_sense_delay_us == 0
        assert ScenarioConfig().radio.lpl_resume_hold_us == 300_000

    def test_empty_file_gives_defaults(self, write_yaml):
        """Test an empty document is the default scenario."""
        config = load_scenario(write_yaml("\n"))

        assert config.node_count == 38

    def test_unknown_key_reports_line(self, write_yaml):
        """Test an unknown top-level key names field and line."""
        path = write_yaml(
            """
            node_count: 10
            colour: blue
            """
        )

        with pytest.raises(ConfigError) as err:
            load_scenario(path)

        assert err.value.field == "colour"
        assert err.value.line == 2
        assert "line 2" in str(err.value)

    def test_nested_range_error(self, write_yaml):
        """Test a nested out-of-range value names the dotted path."""
        path = write_yaml(
            """
            node_count: 10
            mac:
              t_f_us: 0
            """
        )

        with pytest.raises(ConfigError) as err:
            load_scenario(path)

        assert err.value.field == "mac.t_f_us"
        assert err.value.line == 3

    def test_cross_field_error_reports_line(self, write_yaml):
        """Test parameter validation after the schema still finds the line."""
        path = write_yaml(
            """
            node_count: 10
            radio:
              sleep_us: 4700
              extended_preamble_us: 1000
            """
        )

        with pytest.raises(ConfigError) as err:
            load_scenario(path)

        assert err.value.field == "radio.extended_preamble_us"
        assert err.value.line == 4

    def test_exclusive_active_keys(self, write_yaml):
        """Test n_active and active cannot both be given."""
        path = write_yaml(
            """
            node_count: 10
            n_active: 2
            active: [1, 2]
            """
        )

        with pytest.raises(ConfigError):
            load_scenario(path)

    def test_invalid_yaml(self, write_yaml):
        """Test a YAML syntax error is a config error with a line."""
        path = write_yaml(
            """
            node_count: 10
            mac: [unclosed
            """
        )

        with pytest.raises(ConfigError) as err:
            load_scenario(path)

        assert err.value.line is not None

    def test_top_level_must_be_mapping(self, write_yaml):
        """Test a list document is rejected."""
        with pytest.raises(ConfigError):
            load_scenario(write_yaml("- 1\n- 2\n"))

    def test_missing_file(self, tmp_path):
        """Test a missing file is a config error."""
        with pytest.raises(ConfigError):
            load_scenario(tmp_path / "nope.yaml")

    def test_frames_and_order(self, write_yaml):
        """Test frame overrides and the order section."""
        path = write_yaml(
            """
            frames:
              reply:
                preamble: extended
            order:
              demand: 30
            collection: in_band
            """
        )

        config = load_scenario(path)

        assert config.frames["reply"].preamble == "extended"
        assert config.frames["reply"].payload_len == 2
        assert config.order_demand == 30
        assert config.collection == "in_band"

    def test_energy_params_relative_to_scenario(self, write_yaml):
        """Test an energy parameter file is resolved next to the scenario."""
        write_yaml(
            """
            i_tx_ua: 30000
            transitions:
              - {from: IDLE, call: listen, to: RX, energy_pj: 1000}
              - {from: RX, call: packet_received, to: IDLE}
            """,
            name="energy.yaml",
        )
        path = write_yaml("energy_params: energy.yaml\n")

        config = load_scenario(path)

        assert config.energy.i_tx_ua == 30_000
        assert config.energy.transitions[0].energy_pj == 1_000
        assert len(config.energy.transitions) == 2

    def test_inline_energy(self):
        """Test energy parameters given inline."""
        config = scenario_from_dict({"energy": {"voltage_mv": 3300}})

        assert config.energy.voltage_mv == 3_300


class TestLoadEnergyParams:
    """Tests for reading energy parameter files."""

    def test_unknown_state(self, write_yaml):
        """Test a transition into an unknown state is rejected."""
        path = write_yaml(
            """
            transitions:
              - {from: IDLE, call: listen, to: DEEP_SLEEP}
            """,
            name="energy.yaml",
        )

        with pytest.raises(ConfigError) as err:
            load_energy_params(path)

        assert err.value.field == "transitions.0.to"
        assert err.value.line == 2
