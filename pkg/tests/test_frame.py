"""Unit tests for frames and airtime."""

import pytest

from lbtwarehouse.const import BROADCAST_ADDRESS, PREAMBLE_EXTENDED
from lbtwarehouse.exceptions import ConfigError
from lbtwarehouse.frame import Frame, RadioParams, airtime, header_offset_us, preamble_us

pytestmark = pytest.mark.unit


class TestFrame:
    """Tests for the Frame class."""

    def test_broadcast_flag(self):
        """Test broadcast detection."""
        assert Frame(kind="poll", src=0, dst=BROADCAST_ADDRESS).is_broadcast
        assert not Frame(kind="reply", src=3, dst=0).is_broadcast

    def test_unknown_kind(self):
        """Test an unknown frame kind is rejected."""
        with pytest.raises(ValueError):
            Frame(kind="beacon", src=0, dst=1)

    def test_address_fits_eight_bits(self):
        """Test addresses above 255 are rejected."""
        with pytest.raises(ValueError):
            Frame(kind="reply", src=256, dst=0)

    def test_payload_limit(self):
        """Test payloads longer than 126 bytes are rejected."""
        with pytest.raises(ValueError):
            Frame(kind="reply", src=1, dst=0, payload_len=127)

    def test_to_dict(self):
        """Test converting a frame to a dictionary."""
        data = Frame(kind="reply", src=1, dst=0, seq=4, quantity=12).to_dict()

        assert data["kind"] == "reply"
        assert data["seq"] == 4
        assert data["quantity"] == 12


class TestAirtime:
    """Tests for airtime arithmetic."""

    def test_full_payload(self, radio_params):
        """Test 126 B payload plus 14 B overhead at 38.4 kbit/s."""
        frame = Frame(kind="reply", src=1, dst=0, payload_len=126)

        assert airtime(frame, radio_params) == 29_167

    def test_empty_payload(self, radio_params):
        """Test an empty normal-preamble frame."""
        frame = Frame(kind="reply", src=1, dst=0, payload_len=0)

        assert airtime(frame, radio_params) == 2_917

    def test_extended_preamble(self, radio_params):
        """Test the extended preamble replaces the preamble bytes."""
        frame = Frame(kind="poll", src=0, dst=1, payload_len=0, preamble=PREAMBLE_EXTENDED)

        assert airtime(frame, radio_params) == 4_900 + 2_084

    def test_preamble_and_header_offsets(self, radio_params):
        """Test preamble end and header end of a normal frame."""
        frame = Frame(kind="reply", src=1, dst=0, payload_len=2)

        assert preamble_us(frame, radio_params) == 834
        assert header_offset_us(frame, radio_params) == 2_500
        assert header_offset_us(frame, radio_params) < airtime(frame, radio_params)

    def test_extended_header_offset(self, radio_params):
        """Test the header of an extended frame ends after the long preamble."""
        frame = Frame(kind="unicast", src=0, dst=5, preamble=PREAMBLE_EXTENDED)

        assert preamble_us(frame, radio_params) == 4_900
        assert header_offset_us(frame, radio_params) == 4_900 + 1_667


class TestRadioParams:
    """Tests for radio parameter validation."""

    def test_cycle(self):
        """Test the duty cycle is sleep plus sniff."""
        assert RadioParams().cycle_us == 4_900

    def test_extended_preamble_must_cover_sleep(self):
        """Test an extended preamble shorter than the sleep interval is rejected."""
        with pytest.raises(ConfigError) as err:
            RadioParams(extended_preamble_us=4_000)

        assert err.value.field == "radio.extended_preamble_us"

    def test_positive_bit_rate(self):
        """Test a zero bit rate is rejected."""
        with pytest.raises(ConfigError):
            RadioParams(bit_rate=0)
