"""Export Service - Write result tables, traces and metadata."""

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence

from ..channel import ChannelTrace
from ..const import (
    AGGREGATE_FILE,
    ALOHA_FILE,
    ENERGY_LOG_FILE,
    MAC_LOG_FILE,
    METADATA_FILE,
    NODE_STATS_FILE,
    RESULTS_FILE,
    TIMELINE_FILE,
)
from ..energy import EnergyLogEntry
from ..mac import MacLogEntry
from ..models import (
    AGGREGATE_COLUMNS,
    RESULT_COLUMNS,
    AggregateRow,
    ResultRow,
    RunMetadata,
    SerializationHelper,
    format_value,
)
from ..warehouse import RunStats

_LOGGER = logging.getLogger(__name__)

TIMELINE_COLUMNS = ("start_us", "end_us", "sender", "kind", "collided")
MAC_LOG_COLUMNS = (
    "time_us",
    "node",
    "event",
    "from_phase",
    "to_phase",
    "t_ps_us",
    "window_us",
)
ENERGY_LOG_COLUMNS = (
    "time_us",
    "node",
    "kind",
    "call",
    "from_state",
    "to_state",
    "accumulated_pj",
)
NODE_STATS_COLUMNS = (
    "seed",
    "address",
    "active",
    "n_tx",
    "rx_framed",
    "rx_raw",
    "polls_received",
    "replies_received",
    "deliveries",
    "energy_pj",
    "energy_mj",
)
ALOHA_COLUMNS = ("offered_load", "utilization", "analytic", "attempts", "successes")


@dataclass
class ExportResult:
    """Export result metadata."""

    file_path: Path
    rows: int

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary."""
        return {"file_path": str(self.file_path), "rows": self.rows}


class ExportService:
    """Service for writing run artifacts into an output directory."""

    def __init__(self, out_dir: Path):
        """Initialize export service."""
        self.out_dir = Path(out_dir)

    def ensure_dir(self) -> None:
        """Create the output directory."""
        self.out_dir.mkdir(parents=True, exist_ok=True)

    def _write_csv(
        self, name: str, columns: Sequence[str], rows: Iterable[List[str]]
    ) -> ExportResult:
        self.ensure_dir()
        path = self.out_dir / name
        count = 0
        with path.open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow(row)
                count += 1
        _LOGGER.debug(f"Wrote {count} rows to {path}")
        return ExportResult(path, count)

    @staticmethod
    def _cells(data: Dict[str, Any], columns: Sequence[str]) -> List[str]:
        return [format_value(data[column]) for column in columns]

    def write_results(self, rows: List[ResultRow]) -> ExportResult:
        """Write ``results.csv`` sorted by ``(n_active, seed)``."""
        ordered = sorted(rows, key=lambda row: (row.n_active, row.seed))
        return self._write_csv(
            RESULTS_FILE, RESULT_COLUMNS, (row.to_csv_row() for row in ordered)
        )

    def write_aggregate(self, rows: List[AggregateRow]) -> ExportResult:
        """Write ``aggregate.csv``."""
        ordered = sorted(rows, key=lambda row: row.n_active)
        return self._write_csv(
            AGGREGATE_FILE, AGGREGATE_COLUMNS, (row.to_csv_row() for row in ordered)
        )

    def write_timeline(self, trace: ChannelTrace) -> ExportResult:
        """Write the channel occupancy timeline."""
        return self._write_csv(
            TIMELINE_FILE,
            TIMELINE_COLUMNS,
            (self._cells(row, TIMELINE_COLUMNS) for row in trace.rows()),
        )

    def write_mac_log(self, log: List[MacLogEntry]) -> ExportResult:
        """Write the per-node MAC phase transitions."""
        return self._write_csv(
            MAC_LOG_FILE,
            MAC_LOG_COLUMNS,
            (self._cells(entry.to_dict(), MAC_LOG_COLUMNS) for entry in log),
        )

    def write_energy_log(self, log: List[EnergyLogEntry]) -> ExportResult:
        """Write the energy ledger steps."""
        return self._write_csv(
            ENERGY_LOG_FILE,
            ENERGY_LOG_COLUMNS,
            (self._cells(entry.to_dict(), ENERGY_LOG_COLUMNS) for entry in log),
        )

    def write_node_stats(self, stats: List[RunStats]) -> ExportResult:
        """Write per-node counters and energy of one or more runs."""

        def rows() -> Iterable[List[str]]:
            for run in stats:
                for address in sorted(run.nodes):
                    data = run.nodes[address].to_dict()
                    data["seed"] = run.seed
                    data["active"] = int(data["active"])
                    yield self._cells(data, NODE_STATS_COLUMNS)

        return self._write_csv(NODE_STATS_FILE, NODE_STATS_COLUMNS, rows())

    def write_aloha(self, rows: List[Dict[str, Any]]) -> ExportResult:
        """Write the ALOHA utilisation sweep."""
        return self._write_csv(
            ALOHA_FILE,
            ALOHA_COLUMNS,
            (self._cells(row, ALOHA_COLUMNS) for row in rows),
        )

    def write_metadata(self, metadata: RunMetadata) -> ExportResult:
        """Write ``run-metadata.json``."""
        self.ensure_dir()
        path = self.out_dir / METADATA_FILE
        path.write_text(SerializationHelper.to_json(metadata) + "\n", encoding="utf-8")
        _LOGGER.debug(f"Wrote metadata to {path}")
        return ExportResult(path, 1)
