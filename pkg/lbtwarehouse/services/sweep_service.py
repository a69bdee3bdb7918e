"""Sweep Service - Run scenarios over active-set sizes and seeds."""

import asyncio
import logging
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from ..config import ScenarioConfig
from ..exceptions import SimulationError, WarehouseSimError
from ..models import AggregateRow, ResultRow, SweepSpec
from ..warehouse import WarehouseSimulation
from .trace_audit_service import TraceAuditService

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class PointResult:
    """What a worker sends back for one ``(n_active, seed)`` point."""

    row: ResultRow
    trace_hash: str
    event_counts: Dict[str, int]


@dataclass
class SweepResult:
    """All rows of a sweep, sorted, plus their aggregates."""

    rows: List[ResultRow]
    aggregates: List[AggregateRow]
    trace_hashes: Dict[str, str] = field(default_factory=dict)
    event_counts: Dict[str, Dict[str, int]] = field(default_factory=dict)


def run_point(
    config: ScenarioConfig, n_active: int, seed: int, audit: bool = False
) -> PointResult:
    """Run one sweep point; module level so worker processes can pickle it."""
    point_config = config.with_overrides(n_active=n_active)
    result = WarehouseSimulation(point_config, seed).run()
    if audit:
        TraceAuditService().audit(result)
    return PointResult(
        row=result.to_row(),
        trace_hash=result.trace_hash,
        event_counts=result.counters.to_dict(),
    )


def aggregate(rows: List[ResultRow]) -> List[AggregateRow]:
    """Aggregate rows per ``n_active``, ordered by ``n_active``."""
    groups: Dict[int, List[ResultRow]] = defaultdict(list)
    for row in rows:
        groups[row.n_active].append(row)
    return [AggregateRow.from_rows(groups[n_active]) for n_active in sorted(groups)]


class SweepService:
    """Service for running parameter sweeps."""

    def __init__(self, config: ScenarioConfig, audit: bool = False):
        """Initialize sweep service.

        Args:
            config: Base scenario; ``n_active`` is replaced per point
            audit: Verify every run with the trace audit
        """
        self.config = config
        self.audit = audit

    async def async_run_sweep(self, spec: SweepSpec) -> SweepResult:
        """
        Run every point of the sweep.

        Points run in worker processes when ``spec.workers`` is positive and
        inline otherwise. Rows are sorted before aggregation, so the result
        does not depend on completion order.

        Args:
            spec: Range of active-set sizes and seeds

        Returns:
            SweepResult with rows and aggregates

        Raises:
            SimulationError: If any point fails; the sweep is aborted
        """
        spec.validate(self.config.node_count)
        points = spec.points()
        _LOGGER.info(
            f"Sweep over n={spec.n_values[0]}..{spec.n_values[-1]} with "
            f"{spec.seeds} seeds: {len(points)} runs"
        )
        if spec.workers > 0:
            results = await self._async_run_pool(points, spec.workers)
        else:
            results = [self._run_checked(n_active, seed) for n_active, seed in points]

        ordered = sorted(
            zip(points, results), key=lambda item: (item[0][0], item[0][1])
        )
        rows = [result.row for _point, result in ordered]
        hashes = {f"n{n}-s{seed}": result.trace_hash for (n, seed), result in ordered}
        counts = {f"n{n}-s{seed}": result.event_counts for (n, seed), result in ordered}
        return SweepResult(
            rows=rows,
            aggregates=aggregate(rows),
            trace_hashes=hashes,
            event_counts=counts,
        )

    def _run_checked(self, n_active: int, seed: int) -> PointResult:
        try:
            return run_point(self.config, n_active, seed, self.audit)
        except WarehouseSimError as err:
            _LOGGER.error(f"Sweep point n={n_active} seed={seed} failed", exc_info=True)
            raise SimulationError(
                f"Sweep point n={n_active} seed={seed} failed: {err}"
            ) from err

    async def _async_run_pool(
        self, points: List[Tuple[int, int]], workers: int
    ) -> List[PointResult]:
        loop = asyncio.get_running_loop()
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                loop.run_in_executor(
                    pool, run_point, self.config, n_active, seed, self.audit
                )
                for n_active, seed in points
            ]
            results: List[Optional[PointResult]] = []
            for (n_active, seed), future in zip(points, futures):
                try:
                    results.append(await future)
                except WarehouseSimError as err:
                    _LOGGER.error(
                        f"Sweep point n={n_active} seed={seed} failed", exc_info=True
                    )
                    for pending in futures:
                        pending.cancel()
                    raise SimulationError(
                        f"Sweep point n={n_active} seed={seed} failed: {err}"
                    ) from err
        return [result for result in results if result is not None]
