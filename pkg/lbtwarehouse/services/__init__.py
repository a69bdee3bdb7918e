"""Batch services for the warehouse LBT simulator."""

# Import all services for easy access
try:
    from .experiment_service import ExperimentService
except ImportError:
    ExperimentService = None

try:
    from .export_service import ExportService
except ImportError:
    ExportService = None

try:
    from .plot_service import PlotService
except ImportError:
    PlotService = None

try:
    from .scenario_service import ScenarioService
except ImportError:
    ScenarioService = None

try:
    from .sweep_service import SweepService
except ImportError:
    SweepService = None

try:
    from .trace_audit_service import TraceAuditService
except ImportError:
    TraceAuditService = None

__all__ = [
    "ExperimentService",
    "ExportService",
    "PlotService",
    "ScenarioService",
    "SweepService",
    "TraceAuditService",
]
