"""Unit tests for listen-before-talk and ALOHA channel access."""

import pytest

from lbtwarehouse.channel import JamInterval
from lbtwarehouse.const import AP_ADDRESS, PREAMBLE_EXTENDED
from lbtwarehouse.exceptions import ConfigError, SimulationError
from lbtwarehouse.frame import Frame, airtime
from lbtwarehouse.mac import MacParams

pytestmark = pytest.mark.unit


def _unicast(src=1, dst=AP_ADDRESS):
    return Frame(kind="unicast", src=src, dst=dst, payload_len=4, preamble=PREAMBLE_EXTENDED)


def _request_at(kernel, station, due, frame, broadcast_reply=False):
    kernel.schedule_at(
        due,
        "test",
        "request",
        lambda now: station.mac.request_send(frame, now, broadcast_reply),
    )


def _starts(channel, sender):
    return [record.start for record in channel.trace.records if record.sender == sender]


class TestRequestSend:
    """Tests for transmissions on an idle channel."""

    def test_idle_channel_waits_fixed_backoff(self, kernel, channel, make_station):
        """Test a unicast on a silent channel airs after exactly t_F."""
        station = make_station(1, draws=[])
        station.mac.request_send(_unicast(), 0)

        kernel.run_until(100_000)

        assert _starts(channel, 1) == [5_000]
        decision = channel.trace.cca[0]
        assert decision.window_us == 5_000
        assert decision.sensed_activity is False

    def test_broadcast_reply_pre_backoff(self, kernel, channel, make_station, reply_frame):
        """Test a broadcast reply waits its pre-backoff and then t_F."""
        station = make_station(1, draws=[3_000])
        station.mac.request_send(reply_frame(1), 0, broadcast_reply=True)

        kernel.run_until(100_000)

        assert _starts(channel, 1) == [8_000]

    def test_pre_backoff_bound(self, kernel, channel, make_station, reply_frame):
        """Test the largest pre-backoff still airs within 10 ms."""
        station = make_station(1, draws=[5_000])
        station.mac.request_send(reply_frame(1), 0, broadcast_reply=True)

        kernel.run_until(100_000)

        assert _starts(channel, 1) == [10_000]

    def test_queue_overflow(self, make_station):
        """Test a third frame while one is pending and one queued is fatal."""
        station = make_station(1, draws=[])
        station.mac.request_send(_unicast(), 0)
        station.mac.request_send(_unicast(), 0)

        with pytest.raises(SimulationError):
            station.mac.request_send(_unicast(), 0)

    def test_queued_frame_follows(self, kernel, channel, make_station):
        """Test a queued frame is sent after the pending one."""
        station = make_station(1, draws=[])
        station.mac.request_send(_unicast(), 0)
        station.mac.request_send(_unicast(), 0)

        kernel.run_until(100_000)
        first_end = 5_000 + airtime(_unicast(), channel.params)

        assert _starts(channel, 1) == [5_000, first_end + 5_000]
        assert station.mac.frames_sent == 2
        assert station.mac.idle

    def test_reset_drops_pending(self, kernel, channel, make_station):
        """Test reset cancels the listen window without transmitting."""
        station = make_station(1, draws=[])
        station.mac.request_send(_unicast(), 0)
        kernel.run_until(1_000)

        station.mac.reset(1_000)
        kernel.run_until(100_000)

        assert _starts(channel, 1) == []
        assert station.mac.idle


class TestDeferral:
    """Tests for deferral behind foreign activity."""

    def test_zero_draw_waits_fixed_part(self, kernel, channel, make_station):
        """Test a deferred node with t_PS = 0 sends t_F after idle-start."""
        station = make_station(1, draws=[0])
        channel.jam(JamInterval(0, 10_000))
        _request_at(kernel, station, 2_000, _unicast())

        kernel.run_until(100_000)

        assert _starts(channel, 1) == [15_000]
        assert channel.trace.cca[0].sensed_activity is True

    def test_activity_restarts_full_window(self, kernel, channel, make_station, mac_log):
        """Test activity during the wait aborts it; the next idle restarts t_F + t_PS."""
        station = make_station(1, draws=[1_000, 2_000])
        channel.jam(JamInterval(0, 10_000))
        channel.jam(JamInterval(12_000, 13_000))
        _request_at(kernel, station, 2_000, _unicast())

        kernel.run_until(100_000)

        assert _starts(channel, 1) == [13_000 + 7_000]
        assert "activity" in [entry.event for entry in mac_log if entry.node == 1]

    def test_retain_policy_keeps_draw(self, kernel, channel, make_station):
        """Test the retain policy draws t_PS once per frame."""
        params = MacParams(tps_policy="retain", carrier_sense_delay_us=0)
        station = make_station(1, draws=[1_500], mac_params=params)
        channel.jam(JamInterval(0, 10_000))
        channel.jam(JamInterval(12_000, 13_000))
        _request_at(kernel, station, 2_000, _unicast())

        kernel.run_until(100_000)

        assert _starts(channel, 1) == [13_000 + 6_500]

    def test_smallest_backoff_wins(self, kernel, channel, make_station):
        """Test the shortest listen window wins and the others defer again."""
        fast = make_station(1, draws=[500, 0])
        slow = make_station(2, draws=[2_000, 100])
        channel.jam(JamInterval(0, 10_000))
        _request_at(kernel, fast, 2_000, _unicast(src=1))
        _request_at(kernel, slow, 2_000, _unicast(src=2))

        kernel.run_until(100_000)

        first = [r for r in channel.trace.records if not r.is_jam][0]
        assert first.sender == 1
        assert first.start == 15_500
        assert _starts(channel, 2) == [first.end + 5_100]
        assert not any(record.collided for record in channel.trace.records if not record.is_jam)

    def test_equal_backoff_collides(self, kernel, channel, make_station):
        """Test identical listen windows end in a collision."""
        first = make_station(1, draws=[1_000])
        second = make_station(2, draws=[1_000])
        channel.jam(JamInterval(0, 10_000))
        _request_at(kernel, first, 2_000, _unicast(src=1))
        _request_at(kernel, second, 2_000, _unicast(src=2))

        kernel.run_until(100_000)
        frames = [record for record in channel.trace.records if not record.is_jam]

        assert [record.start for record in frames] == [16_000, 16_000]
        assert all(record.collided for record in frames)


class TestCarrierSenseDelay:
    """Tests for carrier onsets that are not yet visible."""

    def _contend(self, kernel, make_station, draws_1, draws_2, delay):
        params = MacParams(carrier_sense_delay_us=delay)
        first = make_station(1, draws=draws_1, mac_params=params)
        second = make_station(2, draws=draws_2, mac_params=params)
        first.mac.channel.jam(JamInterval(0, 10_000))
        _request_at(kernel, first, 2_000, _unicast(src=1))
        _request_at(kernel, second, 2_000, _unicast(src=2))
        kernel.run_until(100_000)
        return [record for record in first.mac.channel.trace.records if not record.is_jam]

    def test_hidden_onset_collides(self, kernel, make_station):
        """Test a window closing within the delay after a foreign onset still transmits."""
        frames = self._contend(kernel, make_station, [1_000], [1_050], delay=80)

        assert [record.start for record in frames] == [16_000, 16_050]
        assert all(record.collided for record in frames)

    def test_visible_onset_defers(self, kernel, make_station, mac_log):
        """Test an onset older than the delay defers the node."""
        frames = self._contend(kernel, make_station, [1_000], [1_100, 0], delay=80)

        assert [record.sender for record in frames] == [1, 2]
        assert frames[1].start == frames[0].end + 5_000
        deferred = [entry for entry in mac_log if entry.node == 2 and entry.event == "activity"]
        assert [entry.time_us for entry in deferred] == [16_080]

    def test_ideal_sensing_defers_immediately(self, kernel, make_station):
        """Test a zero delay defers a window closing 50 us after the onset."""
        frames = self._contend(kernel, make_station, [1_000], [1_050, 0], delay=0)

        assert [record.sender for record in frames] == [1, 2]
        assert not any(record.collided for record in frames)

    def test_young_record_reads_idle(self, kernel, channel, make_station):
        """Test the assessment starts counting while a fresh onset is still hidden."""
        params = MacParams(carrier_sense_delay_us=80)
        station = make_station(1, draws=[0], mac_params=params)
        channel.jam(JamInterval(1_000, 2_000))
        _request_at(kernel, station, 1_050, _unicast())

        kernel.run_until(100_000)

        assert _starts(channel, 1) == [2_000 + 5_000]
        assert channel.trace.cca[0].sensed_activity is True


class TestPreBackoffListening:
    """Tests for the radio state during the pre-backoff."""

    def test_radio_held_during_pre_backoff(self, kernel, make_station, reply_frame):
        """Test the radio listens continuously once a reply is pending."""
        station = make_station(1, draws=[0, 3_000], always_on=False)
        station.mac.request_send(reply_frame(1), 0, broadcast_reply=True)

        assert station.radio.listening_continuously

    def test_blind_pre_backoff_keeps_sleeping(self, kernel, make_station, reply_frame):
        """Test a blind pre-backoff leaves the radio in LPL."""
        params = MacParams(blind_prebackoff=True, carrier_sense_delay_us=0)
        station = make_station(1, draws=[0, 3_000], always_on=False, mac_params=params)
        station.mac.request_send(reply_frame(1), 0, broadcast_reply=True)

        assert station.radio.asleep
        kernel.run_until(3_000)
        assert station.radio.listening_continuously


class TestAloha:
    """Tests for uncontrolled access."""

    def test_sends_immediately(self, kernel, channel, make_station):
        """Test ALOHA airs at the request instant."""
        station = make_station(1, draws=[], mac_params=MacParams(mode="aloha"))
        _request_at(kernel, station, 1_234, _unicast())

        kernel.run_until(100_000)

        assert _starts(channel, 1) == [1_234]
        assert channel.trace.cca == []

    def test_simultaneous_sends_collide(self, kernel, channel, make_station):
        """Test two ALOHA sends at once destroy each other."""
        params = MacParams(mode="aloha")
        first = make_station(1, draws=[], mac_params=params)
        second = make_station(2, draws=[], mac_params=params)
        _request_at(kernel, first, 100, _unicast(src=1))
        _request_at(kernel, second, 100, _unicast(src=2))

        kernel.run_until(100_000)

        assert [record.collided for record in channel.trace.records] == [True, True]


class TestMacParams:
    """Tests for parameter validation."""

    def test_unknown_policy(self):
        """Test an unknown t_PS policy is rejected."""
        with pytest.raises(ConfigError) as err:
            MacParams(tps_policy="sometimes")

        assert err.value.field == "mac.tps_policy"

    def test_zero_step(self):
        """Test the backoff step must be positive."""
        with pytest.raises(ConfigError):
            MacParams(backoff_step_us=0)

    def test_negative_sense_delay(self):
        """Test the carrier-sense delay must not be negative."""
        with pytest.raises(ConfigError) as err:
            MacParams(carrier_sense_delay_us=-1)

        assert err.value.field == "mac.carrier_sense_delay_us"

    def test_defaults(self):
        """Test microsecond backoff resolution and the default sense delay."""
        params = MacParams()

        assert params.backoff_step_us == 1
        assert params.carrier_sense_delay_us == 80

    def test_to_dict(self):
        """Test converting the parameters to a dictionary."""
        assert MacParams().to_dict()["t_f_us"] == 5_000
