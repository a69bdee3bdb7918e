"""Scenario and energy-parameter files.

Both are YAML documents validated with voluptuous. Validation failures are
reported as :class:`ConfigError` carrying the dotted field path and the
line of the offending node.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any

import voluptuous as vol
import yaml

from .const import (
    COLLECTION_IN_BAND,
    COLLECTION_OUT_OF_BAND,
    DEFAULT_NODE_COUNT,
    DEFAULT_PAYLOADS,
    DEFAULT_POLL_COUNT,
    DEFAULT_POLL_FIRST_OFFSET_MS,
    DEFAULT_POLL_SPACING_MS,
    DEFAULT_PREAMBLES,
    DEFAULT_PRODUCT,
    DEFAULT_QUANTITY,
    DEFAULT_SEED,
    DEFAULT_START_AT_MS,
    DEFAULT_UNICAST_RETRIES,
    DEFAULT_UNICAST_TIMEOUT_MS,
    DEFAULT_WINDOW_MS,
    DRIVER_CALLS,
    ENERGY_STATES,
    FRAME_POLL,
    FRAME_REPLY,
    FRAME_START,
    FRAME_STOP,
    FRAME_UNICAST,
    LPL_ALTERNATING,
    LPL_AVERAGED,
    MAX_ADDRESS,
    MAX_PAYLOAD_LEN,
    MODE_ALOHA,
    MODE_LBT,
    PREAMBLE_EXTENDED,
    PREAMBLE_NORMAL,
    TPS_REDRAW,
    TPS_RETAIN,
)
from .energy import EnergyParams, TransitionSpec
from .exceptions import ConfigError
from .frame import RadioParams
from .mac import MacParams

_LOGGER = logging.getLogger(__name__)

APP_FRAME_KINDS = (FRAME_POLL, FRAME_REPLY, FRAME_START, FRAME_STOP, FRAME_UNICAST)

_POSITIVE = vol.All(int, vol.Range(min=1))
_NON_NEGATIVE = vol.All(int, vol.Range(min=0))

RADIO_SCHEMA = vol.Schema(
    {
        vol.Optional("bit_rate"): _POSITIVE,
        vol.Optional("sniff_on_us"): _POSITIVE,
        vol.Optional("sleep_us"): _POSITIVE,
        vol.Optional("preamble_bytes"): _POSITIVE,
        vol.Optional("sync_bytes"): _POSITIVE,
        vol.Optional("header_bytes"): _POSITIVE,
        vol.Optional("crc_bytes"): _POSITIVE,
        vol.Optional("extended_preamble_us"): _POSITIVE,
        vol.Optional("lpl_resume_hold_us"): _NON_NEGATIVE,
    },
    extra=vol.PREVENT_EXTRA,
)

MAC_SCHEMA = vol.Schema(
    {
        vol.Optional("t_f_us"): _POSITIVE,
        vol.Optional("t_ps_max_us"): _NON_NEGATIVE,
        vol.Optional("pre_backoff_max_us"): _NON_NEGATIVE,
        vol.Optional("backoff_step_us"): _POSITIVE,
        vol.Optional("tps_policy"): vol.In([TPS_REDRAW, TPS_RETAIN]),
        vol.Optional("mode"): vol.In([MODE_LBT, MODE_ALOHA]),
        vol.Optional("blind_prebackoff"): bool,
        vol.Optional("carrier_sense_delay_us"): _NON_NEGATIVE,
    },
    extra=vol.PREVENT_EXTRA,
)

TRANSITION_SCHEMA = vol.Schema(
    {
        vol.Required("from"): vol.In(list(ENERGY_STATES)),
        vol.Required("call"): vol.In(list(DRIVER_CALLS)),
        vol.Required("to"): vol.In(list(ENERGY_STATES)),
        vol.Optional("energy_pj", default=0): _NON_NEGATIVE,
    },
    extra=vol.PREVENT_EXTRA,
)

ENERGY_SCHEMA = vol.Schema(
    {
        vol.Optional("voltage_mv"): _POSITIVE,
        vol.Optional("i_rx_ua"): _NON_NEGATIVE,
        vol.Optional("i_lpl_avg_ua"): _NON_NEGATIVE,
        vol.Optional("i_tx_ua"): _NON_NEGATIVE,
        vol.Optional("i_idle_ua"): _NON_NEGATIVE,
        vol.Optional("i_sleep_ua"): _NON_NEGATIVE,
        vol.Optional("transitions"): [TRANSITION_SCHEMA],
    },
    extra=vol.PREVENT_EXTRA,
)

FRAME_SPEC_SCHEMA = vol.Schema(
    {
        vol.Optional("payload_len"): vol.All(int, vol.Range(min=0, max=MAX_PAYLOAD_LEN)),
        vol.Optional("preamble"): vol.In([PREAMBLE_NORMAL, PREAMBLE_EXTENDED]),
    },
    extra=vol.PREVENT_EXTRA,
)

SCENARIO_SCHEMA = vol.Schema(
    {
        vol.Optional("node_count"): vol.All(int, vol.Range(min=1, max=MAX_ADDRESS - 1)),
        vol.Exclusive("n_active", "active_set"): _POSITIVE,
        vol.Exclusive("active", "active_set"): [vol.All(int, vol.Range(min=1))],
        vol.Optional("product"): _NON_NEGATIVE,
        vol.Optional("quantity"): _NON_NEGATIVE,
        vol.Optional("polls"): vol.Schema(
            {
                vol.Optional("count"): _NON_NEGATIVE,
                vol.Optional("first_offset_ms"): _NON_NEGATIVE,
                vol.Optional("spacing_ms"): _POSITIVE,
            },
            extra=vol.PREVENT_EXTRA,
        ),
        vol.Optional("window_ms"): _POSITIVE,
        vol.Optional("start_at_ms"): _NON_NEGATIVE,
        vol.Optional("mode"): vol.In([MODE_LBT, MODE_ALOHA]),
        vol.Optional("tps_policy"): vol.In([TPS_REDRAW, TPS_RETAIN]),
        vol.Optional("seed"): _NON_NEGATIVE,
        vol.Optional("radio"): RADIO_SCHEMA,
        vol.Optional("mac"): MAC_SCHEMA,
        vol.Exclusive("energy", "energy_source"): ENERGY_SCHEMA,
        vol.Exclusive("energy_params", "energy_source"): str,
        vol.Optional("frames"): vol.Schema(
            {vol.Optional(kind): FRAME_SPEC_SCHEMA for kind in APP_FRAME_KINDS},
            extra=vol.PREVENT_EXTRA,
        ),
        vol.Optional("collection"): vol.In([COLLECTION_OUT_OF_BAND, COLLECTION_IN_BAND]),
        vol.Optional("unicast"): vol.Schema(
            {
                vol.Optional("timeout_ms"): _POSITIVE,
                vol.Optional("retries"): _NON_NEGATIVE,
            },
            extra=vol.PREVENT_EXTRA,
        ),
        vol.Optional("lpl_model"): vol.In([LPL_AVERAGED, LPL_ALTERNATING]),
        vol.Optional("order"): vol.Schema(
            {vol.Required("demand"): _POSITIVE}, extra=vol.PREVENT_EXTRA
        ),
    },
    extra=vol.PREVENT_EXTRA,
)


@dataclass(frozen=True)
class FrameSpec:
    """Payload length and preamble mode of one application frame kind."""

    payload_len: int
    preamble: str


@dataclass(frozen=True)
class PollSchedule:
    """When the AP polls, relative to the start broadcast request."""

    count: int = DEFAULT_POLL_COUNT
    first_offset_ms: int = DEFAULT_POLL_FIRST_OFFSET_MS
    spacing_ms: int = DEFAULT_POLL_SPACING_MS

    def offsets_us(self) -> list[int]:
        """Poll offsets in microseconds."""
        return [
            (self.first_offset_ms + index * self.spacing_ms) * 1000
            for index in range(self.count)
        ]


@dataclass(frozen=True)
class UnicastParams:
    """Retransmission settings of sequence-numbered unicast requests."""

    timeout_ms: int = DEFAULT_UNICAST_TIMEOUT_MS
    retries: int = DEFAULT_UNICAST_RETRIES


def default_frames() -> dict[str, FrameSpec]:
    """Default payload and preamble for each application frame kind."""
    return {
        kind: FrameSpec(DEFAULT_PAYLOADS[kind], DEFAULT_PREAMBLES[kind])
        for kind in APP_FRAME_KINDS
    }


@dataclass(frozen=True)
class ScenarioConfig:
    """A fully resolved experiment scenario."""

    node_count: int = DEFAULT_NODE_COUNT
    # 0 selects every node
    n_active: int = 0
    active: tuple[int, ...] | None = None
    product: int = DEFAULT_PRODUCT
    quantity: int = DEFAULT_QUANTITY
    polls: PollSchedule = field(default_factory=PollSchedule)
    window_ms: int = DEFAULT_WINDOW_MS
    start_at_ms: int = DEFAULT_START_AT_MS
    seed: int = DEFAULT_SEED
    radio: RadioParams = field(default_factory=RadioParams)
    mac: MacParams = field(default_factory=MacParams)
    energy: EnergyParams = field(default_factory=EnergyParams)
    frames: dict[str, FrameSpec] = field(default_factory=default_frames)
    collection: str = COLLECTION_OUT_OF_BAND
    unicast: UnicastParams = field(default_factory=UnicastParams)
    lpl_model: str = LPL_AVERAGED
    order_demand: int | None = None
    source: str | None = None

    def __post_init__(self) -> None:
        """Cross-field validation."""
        if self.active is not None:
            if not self.active:
                raise ConfigError("must name at least one node", field="active")
            if len(set(self.active)) != len(self.active):
                raise ConfigError("duplicate addresses", field="active")
            for address in self.active:
                if not 1 <= address <= self.node_count:
                    raise ConfigError(
                        f"address {address} outside 1..{self.node_count}", field="active"
                    )
            object.__setattr__(self, "n_active", len(self.active))
        elif self.n_active == 0:
            object.__setattr__(self, "n_active", self.node_count)
        elif not 1 <= self.n_active <= self.node_count:
            raise ConfigError(
                f"{self.n_active} outside 1..{self.node_count}", field="n_active"
            )
        self._check_polls()

    def _check_polls(self) -> None:
        offsets = self.polls.offsets_us()
        if offsets and offsets[-1] >= self.window_ms * 1000:
            raise ConfigError(
                f"last poll at {offsets[-1] // 1000} ms is not inside the "
                f"{self.window_ms} ms window",
                field="polls",
            )

    def with_overrides(self, **changes: Any) -> "ScenarioConfig":
        """Copy with top-level fields replaced, re-validating the result.

        ``mode`` and ``tps_policy`` are forwarded to the MAC parameters.
        """
        mac_changes = {
            key: changes.pop(key)
            for key in ("mode", "tps_policy")
            if changes.get(key) is not None
        }
        changes = {key: value for key, value in changes.items() if value is not None}
        if mac_changes:
            changes["mac"] = replace(self.mac, **mac_changes)
        if "n_active" in changes:
            changes.setdefault("active", None)
        return replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        """Convert to dictionary for the run metadata."""
        result = asdict(self)
        result["energy"] = self.energy.to_dict()
        result["active"] = list(self.active) if self.active is not None else None
        return result


def _line_of(root: yaml.Node | None, path: list[Any]) -> int | None:
    """1-based line of the node at ``path`` (or its deepest existing parent)."""
    if root is None:
        return None
    node = root
    line = node.start_mark.line + 1
    for key in path:
        if isinstance(node, yaml.MappingNode):
            for key_node, value_node in node.value:
                if key_node.value == str(key):
                    line = key_node.start_mark.line + 1
                    node = value_node
                    break
            else:
                break
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int):
            if key >= len(node.value):
                break
            node = node.value[key]
            line = node.start_mark.line + 1
        else:
            break
    return line


def _parse_yaml(text: str, source: str) -> tuple[dict[str, Any], yaml.Node | None]:
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as err:
        mark = getattr(err, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ConfigError(f"{source}: invalid YAML ({err})", line=line) from err
    if data is None:
        return {}, root
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be a mapping", line=1)
    return data, root


def _validate(
    schema: vol.Schema, data: dict[str, Any], root: yaml.Node | None, prefix: str = ""
) -> dict[str, Any]:
    try:
        return schema(data)
    except vol.MultipleInvalid as err:
        first = err.errors[0]
        path = [str(part) for part in first.path]
        field_name = ".".join(([prefix] if prefix else []) + path)
        raise ConfigError(first.msg, field=field_name, line=_line_of(root, first.path)) from err


def _read(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigError(f"cannot read {path}: {err.strerror}") from err


def energy_params_from_dict(data: dict[str, Any]) -> EnergyParams:
    """Build :class:`EnergyParams` from a validated mapping."""
    values = {key: value for key, value in data.items() if key != "transitions"}
    if "transitions" in data:
        values["transitions"] = tuple(
            TransitionSpec(item["from"], item["call"], item["to"], item["energy_pj"])
            for item in data["transitions"]
        )
    return EnergyParams(**values)


def load_energy_params(path: str | Path) -> EnergyParams:
    """Load an energy parameter file.

    Args:
        path: YAML file with voltage, currents and optional transition table

    Returns:
        EnergyParams: Validated parameters

    Raises:
        ConfigError: If the file is missing or malformed
    """
    path = Path(path)
    data, root = _parse_yaml(_read(path), str(path))
    validated = _validate(ENERGY_SCHEMA, data, root)
    _LOGGER.debug(f"Loaded energy parameters from {path}")
    return energy_params_from_dict(validated)


def scenario_from_dict(
    data: dict[str, Any],
    root: yaml.Node | None = None,
    base_dir: Path | None = None,
    source: str | None = None,
) -> ScenarioConfig:
    """Validate a scenario mapping and build the :class:`ScenarioConfig`."""
    validated = _validate(SCENARIO_SCHEMA, data, root)
    try:
        return _build_scenario(validated, base_dir, source)
    except ConfigError as err:
        if err.line is None and err.field:
            err = ConfigError(
                err.message, field=err.field, line=_line_of(root, err.field.split("."))
            )
        raise err from None


def _build_scenario(
    validated: dict[str, Any], base_dir: Path | None, source: str | None
) -> ScenarioConfig:
    values: dict[str, Any] = {"source": source}
    for key in (
        "node_count",
        "n_active",
        "product",
        "quantity",
        "window_ms",
        "start_at_ms",
        "seed",
        "collection",
        "lpl_model",
    ):
        if key in validated:
            values[key] = validated[key]
    if "active" in validated:
        values["active"] = tuple(validated["active"])
    if "polls" in validated:
        values["polls"] = PollSchedule(**validated["polls"])
    if "unicast" in validated:
        values["unicast"] = UnicastParams(**validated["unicast"])
    if "order" in validated:
        values["order_demand"] = validated["order"]["demand"]
    if "radio" in validated:
        values["radio"] = RadioParams(**validated["radio"])
    mac_values = dict(validated.get("mac", {}))
    for key in ("mode", "tps_policy"):
        if key in validated:
            mac_values[key] = validated[key]
    values["mac"] = MacParams(**mac_values)
    if "energy" in validated:
        values["energy"] = energy_params_from_dict(validated["energy"])
    elif "energy_params" in validated:
        energy_path = Path(validated["energy_params"])
        if base_dir is not None and not energy_path.is_absolute():
            energy_path = base_dir / energy_path
        values["energy"] = load_energy_params(energy_path)
    frames = default_frames()
    for kind, spec in validated.get("frames", {}).items():
        frames[kind] = replace(frames[kind], **spec)
    values["frames"] = frames
    return ScenarioConfig(**values)


def load_scenario(path: str | Path) -> ScenarioConfig:
    """Load and validate a scenario file.

    Raises:
        ConfigError: If the file is missing or malformed
    """
    path = Path(path)
    data, root = _parse_yaml(_read(path), str(path))
    config = scenario_from_dict(data, root, base_dir=path.parent, source=str(path))
    _LOGGER.info(
        f"Loaded scenario {path}: {config.node_count} nodes, {config.n_active} active, "
        f"mode {config.mac.mode}"
    )
    return config
