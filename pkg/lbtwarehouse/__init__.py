"""Discrete-event simulator of a dense listen-before-talk warehouse network."""

from .config import ScenarioConfig, load_energy_params, load_scenario
from .const import DOMAIN, VERSION
from .exceptions import (
    ConfigError,
    EnergyModelError,
    InvariantViolation,
    SimulationError,
    WarehouseSimError,
)
from .warehouse import RunResult, RunStats, WarehouseSimulation, run_experiment, throughput

__version__ = VERSION

__all__ = [
    "DOMAIN",
    "ConfigError",
    "EnergyModelError",
    "InvariantViolation",
    "RunResult",
    "RunStats",
    "ScenarioConfig",
    "SimulationError",
    "WarehouseSimError",
    "WarehouseSimulation",
    "load_energy_params",
    "load_scenario",
    "run_experiment",
    "throughput",
]
