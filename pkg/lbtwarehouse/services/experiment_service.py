"""Experiment Service - Run single warehouse scenarios."""

import logging
import time
from dataclasses import dataclass
from typing import Optional

from ..config import ScenarioConfig
from ..engine import RandomStreams
from ..warehouse import RunResult, WarehouseSimulation
from .trace_audit_service import AuditReport, TraceAuditService

_LOGGER = logging.getLogger(__name__)


@dataclass
class ExperimentOutcome:
    """A finished run plus its optional audit."""

    result: RunResult
    audit: Optional[AuditReport] = None
    wall_time_s: float = 0.0


class ExperimentService:
    """Service for running one scenario at a time."""

    def __init__(self, config: ScenarioConfig, audit: bool = False):
        """Initialize experiment service.

        Args:
            config: Scenario to run
            audit: Verify every run with the trace audit
        """
        self.config = config
        self.audit = audit
        self._auditor = TraceAuditService()

    def run(
        self,
        seed: Optional[int] = None,
        n_active: Optional[int] = None,
        streams: Optional[RandomStreams] = None,
    ) -> ExperimentOutcome:
        """
        Run the scenario once.

        Args:
            seed: Run seed, defaults to the scenario's seed
            n_active: Override of the active-set size
            streams: Random streams with scripted overrides

        Returns:
            ExperimentOutcome with the run result and audit report
        """
        config = self.config
        if n_active is not None:
            config = config.with_overrides(n_active=n_active)
        seed = config.seed if seed is None else seed
        started = time.perf_counter()
        result = WarehouseSimulation(config, seed, streams).run()
        elapsed = time.perf_counter() - started
        report = self._auditor.audit(result) if self.audit else None
        row = result.to_row()
        _LOGGER.info(
            f"Run n={row.n_active} seed={seed}: T={row.throughput} "
            f"E_mean={row.energy_mean_mj:.3f} mJ ({elapsed:.2f} s)"
        )
        return ExperimentOutcome(result=result, audit=report, wall_time_s=elapsed)
