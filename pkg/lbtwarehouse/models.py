"""Result and request models for the experiment front end."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .const import (
    METADATA_SCHEMA_VERSION,
    NOT_A_VALUE,
    RESULTS_SCHEMA_VERSION,
    VERSION,
)
from .exceptions import ConfigError

RESULT_COLUMNS = (
    "n_active",
    "seed",
    "throughput",
    "n_rx",
    "sum_n_tx",
    "energy_mean_mj",
    "energy_std_mj",
    "energy_min_mj",
    "energy_max_mj",
)

AGGREGATE_COLUMNS = (
    "n_active",
    "runs",
    "defined_runs",
    "throughput_mean",
    "throughput_std",
    "energy_mean_mj",
    "energy_std_mj",
    "energy_node_std_mj",
)


def format_value(value: Any) -> str:
    """Render a CSV cell; floats get a fixed precision, ``None`` becomes NA."""
    if value is None:
        return NOT_A_VALUE
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.6f}"
    return str(value)


@dataclass(frozen=True)
class ResultRow:
    """One simulated run in ``results.csv``."""

    n_active: int
    seed: int
    throughput: float | None
    n_rx: int
    sum_n_tx: int
    energy_mean_mj: float
    energy_std_mj: float
    energy_min_mj: float
    energy_max_mj: float

    @classmethod
    def from_energies(
        cls,
        n_active: int,
        seed: int,
        throughput: float | None,
        n_rx: int,
        sum_n_tx: int,
        energies_pj: list[int],
    ) -> "ResultRow":
        """Summarize per-node energies (pJ) into mJ statistics."""
        values = np.asarray(energies_pj, dtype=np.float64) / 1e9
        if values.size == 0:
            values = np.zeros(1)
        std = float(np.std(values, ddof=1)) if values.size > 1 else 0.0
        return cls(
            n_active=n_active,
            seed=seed,
            throughput=throughput,
            n_rx=n_rx,
            sum_n_tx=sum_n_tx,
            energy_mean_mj=float(np.mean(values)),
            energy_std_mj=std,
            energy_min_mj=float(np.min(values)),
            energy_max_mj=float(np.max(values)),
        )

    def to_dict(self) -> dict[str, Any]:
        """Convert to dictionary."""
        return asdict(self)

    def to_csv_row(self) -> list[str]:
        """Cells in :data:`RESULT_COLUMNS` order."""
        data = self.to_dict()
        return [format_value(data[column]) for column in RESULT_COLUMNS]


@dataclass(frozen=True)
class AggregateRow:
    """Seed aggregate for one active-set size in ``aggregate.csv``."""

    n_active: int
    runs: int
    defined_runs: int
    throughput_mean: float | None
    throughput_std: float | None
    energy_mean_mj: float
    energy_std_mj: float
    energy_node_std_mj: float

    @classmethod
    def from_rows(cls, rows: list[ResultRow]) -> "AggregateRow":
        """Aggregate the runs of one ``n_active``.

        Throughput statistics only use runs where it is defined. The energy
        spread is reported both across runs and as the mean per-run spread
        between nodes.
        """
        if not rows:
            raise ValueError("Cannot aggregate an empty set of runs")
        defined = np.asarray(
            [row.throughput for row in rows if row.throughput is not None],
            dtype=np.float64,
        )
        energy = np.asarray([row.energy_mean_mj for row in rows], dtype=np.float64)
        node_std = np.asarray([row.energy_std_mj for row in rows], dtype=np.float64)
        return cls(
            n_active=rows[0].n_active,
            runs=len(rows),
            defined_runs=int(defined.size),
            throughput_mean=float(defined.mean()) if defined.size else None,
            throughput_std=float(defined.std(ddof=1)) if defined.size > 1 else None,
            energy_mean_mj=float(energy.mean()),
            energy_std_mj=float(energy.std(ddof=1)) if energy.size > 1 else 0.0,
            energy_node_std_mj=float(node_std.mean()),
        )

    def to_dict(self) -> dict[str, Any]:
        """Convert to dictionary."""
        return asdict(self)

    def to_csv_row(self) -> list[str]:
        """Cells in :data:`AGGREGATE_COLUMNS` order."""
        data = self.to_dict()
        return [format_value(data[column]) for column in AGGREGATE_COLUMNS]


@dataclass(frozen=True)
class SweepSpec:
    """Which active-set sizes and how many seeds a sweep runs."""

    n_values: tuple[int, ...]
    seeds: int = 1
    base_seed: int = 1
    out_dir: Path | None = None
    workers: int = 0

    def validate(self, node_count: int) -> None:
        """Check the sweep points against the scenario's node count.

        Raises:
            ConfigError: If the range or seed count is invalid
        """
        if self.seeds < 1:
            raise ConfigError("must be at least 1", field="seeds")
        if not self.n_values:
            raise ConfigError("empty range", field="n")
        for n_active in self.n_values:
            if not 1 <= n_active <= node_count:
                raise ConfigError(f"{n_active} outside 1..{node_count}", field="n")
        if self.workers < 0:
            raise ConfigError("must not be negative", field="workers")

    def points(self) -> list[tuple[int, int]]:
        """Every ``(n_active, seed)`` pair in a stable order."""
        return [
            (n_active, self.base_seed + offset)
            for n_active in self.n_values
            for offset in range(self.seeds)
        ]


@dataclass
class RunMetadata:
    """Contents of ``run-metadata.json``."""

    command: str
    config: dict[str, Any]
    seeds: list[int]
    trace_hashes: dict[str, str] = field(default_factory=dict)
    event_counts: dict[str, dict[str, int]] = field(default_factory=dict)
    schema_version: int = METADATA_SCHEMA_VERSION
    results_schema_version: int = RESULTS_SCHEMA_VERSION
    simulator_version: str = VERSION

    def to_dict(self) -> dict[str, Any]:
        """Convert to dictionary with sorted keys for stable output."""
        return {
            "schema_version": self.schema_version,
            "results_schema_version": self.results_schema_version,
            "simulator_version": self.simulator_version,
            "command": self.command,
            "seeds": list(self.seeds),
            "config": self.config,
            "trace_hashes": dict(sorted(self.trace_hashes.items())),
            "event_counts": dict(sorted(self.event_counts.items())),
        }


class SerializationHelper:
    """Helper class for serializing complex objects."""

    @staticmethod
    def to_dict(obj: Any) -> Any:
        """Convert object to plain JSON types, handling various types."""
        if hasattr(obj, "to_dict"):
            return SerializationHelper.to_dict(obj.to_dict())
        elif hasattr(obj, "__dataclass_fields__"):
            return SerializationHelper.to_dict(asdict(obj))
        elif isinstance(obj, Path):
            return str(obj)
        elif isinstance(obj, np.generic):
            return obj.item()
        elif isinstance(obj, dict):
            return {str(k): SerializationHelper.to_dict(v) for k, v in obj.items()}
        elif isinstance(obj, (list, tuple)):
            return [SerializationHelper.to_dict(item) for item in obj]
        else:
            return obj

    @staticmethod
    def to_json(obj: Any) -> str:
        """Convert object to JSON string."""
        return json.dumps(
            SerializationHelper.to_dict(obj), default=str, indent=2, sort_keys=False
        )
