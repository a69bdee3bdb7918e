"""Over-the-air frames and their airtime."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Any, Literal

from .const import (
    BROADCAST_ADDRESS,
    DEFAULT_BIT_RATE,
    DEFAULT_CRC_BYTES,
    DEFAULT_EXTENDED_PREAMBLE_US,
    DEFAULT_HEADER_BYTES,
    DEFAULT_LPL_RESUME_HOLD_US,
    DEFAULT_PREAMBLE_BYTES,
    DEFAULT_SLEEP_US,
    DEFAULT_SNIFF_ON_US,
    DEFAULT_SYNC_BYTES,
    FRAME_KINDS,
    MAX_ADDRESS,
    MAX_PAYLOAD_LEN,
    PREAMBLE_EXTENDED,
    PREAMBLE_NORMAL,
)
from .exceptions import ConfigError

FrameKind = Literal["poll", "reply", "unicast", "start", "stop", "jam"]
PreambleMode = Literal["normal", "extended"]


@dataclass(frozen=True)
class Frame:
    """An over-the-air packet."""

    kind: FrameKind
    src: int
    dst: int
    seq: int = 0
    payload_len: int = 0
    preamble: PreambleMode = PREAMBLE_NORMAL
    # Application content, not part of the airtime
    product: int | None = None
    quantity: int | None = None

    def __post_init__(self) -> None:
        """Validate field ranges."""
        if self.kind not in FRAME_KINDS:
            raise ValueError(f"Unknown frame kind: {self.kind}")
        for name in ("src", "dst", "seq"):
            value = getattr(self, name)
            if not 0 <= value <= MAX_ADDRESS:
                raise ValueError(f"Frame {name}={value} does not fit 8 bits")
        if not 0 <= self.payload_len <= MAX_PAYLOAD_LEN:
            raise ValueError(
                f"Payload length {self.payload_len} outside 0..{MAX_PAYLOAD_LEN}"
            )
        if self.preamble not in (PREAMBLE_NORMAL, PREAMBLE_EXTENDED):
            raise ValueError(f"Unknown preamble mode: {self.preamble}")

    @property
    def is_broadcast(self) -> bool:
        """Whether the frame is addressed to everyone."""
        return self.dst == BROADCAST_ADDRESS

    def to_dict(self) -> dict[str, Any]:
        """Convert frame to dictionary."""
        return asdict(self)


@dataclass(frozen=True)
class RadioParams:
    """Physical layer and duty-cycle parameters."""

    bit_rate: int = DEFAULT_BIT_RATE
    sniff_on_us: int = DEFAULT_SNIFF_ON_US
    sleep_us: int = DEFAULT_SLEEP_US
    preamble_bytes: int = DEFAULT_PREAMBLE_BYTES
    sync_bytes: int = DEFAULT_SYNC_BYTES
    header_bytes: int = DEFAULT_HEADER_BYTES
    crc_bytes: int = DEFAULT_CRC_BYTES
    extended_preamble_us: int = DEFAULT_EXTENDED_PREAMBLE_US
    lpl_resume_hold_us: int = DEFAULT_LPL_RESUME_HOLD_US

    def __post_init__(self) -> None:
        """Validate the parameter set."""
        for name in (
            "bit_rate",
            "sniff_on_us",
            "sleep_us",
            "preamble_bytes",
            "sync_bytes",
            "header_bytes",
            "crc_bytes",
            "extended_preamble_us",
        ):
            if getattr(self, name) <= 0:
                raise ConfigError("must be positive", field=f"radio.{name}")
        if self.extended_preamble_us < self.sleep_us:
            raise ConfigError(
                f"must be at least sleep_us ({self.sleep_us})",
                field="radio.extended_preamble_us",
            )
        if self.lpl_resume_hold_us < 0:
            raise ConfigError("must not be negative", field="radio.lpl_resume_hold_us")

    @property
    def cycle_us(self) -> int:
        """Length of one sleep + sniff duty cycle."""
        return self.sleep_us + self.sniff_on_us

    def to_dict(self) -> dict[str, Any]:
        """Convert to dictionary."""
        return asdict(self)


def bytes_to_us(n_bytes: int, params: RadioParams) -> int:
    """Airtime of whole bytes, rounded up to the next microsecond."""
    return -(-(8 * n_bytes * 1_000_000) // params.bit_rate)


def preamble_us(frame: Frame, params: RadioParams) -> int:
    """Duration of the preamble portion of a frame."""
    if frame.preamble == PREAMBLE_EXTENDED:
        return params.extended_preamble_us
    return bytes_to_us(params.preamble_bytes, params)


def airtime(frame: Frame, params: RadioParams) -> int:
    """Total on-air duration of a frame in microseconds.

    Normal frames take ``ceil(total_bits * 1e6 / bit_rate)``; for extended
    preambles the preamble bytes are replaced by ``extended_preamble_us``.
    """
    body = params.sync_bytes + params.header_bytes + frame.payload_len + params.crc_bytes
    if frame.preamble == PREAMBLE_EXTENDED:
        return params.extended_preamble_us + bytes_to_us(body, params)
    return bytes_to_us(params.preamble_bytes + body, params)


def header_offset_us(frame: Frame, params: RadioParams) -> int:
    """Offset from frame start to the end of the header (destination known)."""
    if frame.preamble == PREAMBLE_EXTENDED:
        return params.extended_preamble_us + bytes_to_us(
            params.sync_bytes + params.header_bytes, params
        )
    return bytes_to_us(
        params.preamble_bytes + params.sync_bytes + params.header_bytes, params
    )
