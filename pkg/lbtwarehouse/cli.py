"""Command line front end.

Sub-commands:

* ``run``: one scenario run with traces
* ``sweep``: active-set sizes times seeds, with aggregates
* ``fig5`` (alias ``deferral``): the scripted three-device deferral timeline
* ``aloha``: pure-ALOHA utilisation over offered load
"""

from __future__ import annotations

import argparse
import asyncio
import logging
import sys
from pathlib import Path
from typing import Sequence

from .config import ScenarioConfig, load_energy_params, load_scenario
from .const import (
    EXIT_CONFIG_ERROR,
    EXIT_OK,
    EXIT_RUNTIME_ERROR,
    MODE_ALOHA,
    MODE_LBT,
    TPS_REDRAW,
    TPS_RETAIN,
    VERSION,
)
from .exceptions import ConfigError, SimulationError
from .models import RunMetadata, SweepSpec
from .services.experiment_service import ExperimentService
from .services.export_service import ExportService
from .services.plot_service import PlotService
from .services.scenario_service import DEFAULT_ALOHA_LOADS, ScenarioService
from .services.sweep_service import SweepService

_LOGGER = logging.getLogger(__name__)


def parse_n_range(text: str) -> tuple[int, ...]:
    """Parse ``1..38``, ``4`` or ``1,2,8`` into active-set sizes.

    Raises:
        ConfigError: If the text is not a valid range
    """
    try:
        if ".." in text:
            low, high = (int(part) for part in text.split("..", 1))
            values = tuple(range(low, high + 1))
        else:
            values = tuple(int(part) for part in text.split(","))
    except ValueError:
        raise ConfigError(f"cannot parse range '{text}'", field="n") from None
    if not values:
        raise ConfigError(f"empty range '{text}'", field="n")
    return values


def parse_loads(text: str) -> tuple[float, ...]:
    """Parse a comma separated list of offered loads."""
    try:
        loads = tuple(float(part) for part in text.split(","))
    except ValueError:
        raise ConfigError(f"cannot parse loads '{text}'", field="loads") from None
    if any(load <= 0 for load in loads):
        raise ConfigError("offered loads must be positive", field="loads")
    return loads


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with all sub-commands."""
    parser = argparse.ArgumentParser(
        prog="lbtwarehouse",
        description="Discrete-event simulator of a listen-before-talk warehouse network",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="warnings only")
    commands = parser.add_subparsers(dest="command", required=True)

    def scenario_options(sub: argparse.ArgumentParser) -> None:
        sub.add_argument("scenario", nargs="?", help="scenario YAML file")
        sub.add_argument("--out", required=True, type=Path, help="output directory")
        sub.add_argument("--mode", choices=[MODE_LBT, MODE_ALOHA])
        sub.add_argument("--tps-policy", choices=[TPS_REDRAW, TPS_RETAIN])
        sub.add_argument("--energy-params", type=Path, help="energy parameter YAML")
        sub.add_argument(
            "--audit", action="store_true", help="verify every run with the trace audit"
        )

    run = commands.add_parser("run", help="run one scenario")
    scenario_options(run)
    run.add_argument("--seed", type=int, help="run seed")
    run.add_argument("--n", type=int, dest="n_active", help="active-set size")

    sweep = commands.add_parser("sweep", help="sweep active-set sizes and seeds")
    scenario_options(sweep)
    sweep.add_argument("--n", default="1..38", dest="n_range", help="e.g. 1..38")
    sweep.add_argument("--seeds", type=int, default=1, help="seeds per point")
    sweep.add_argument("--seed", type=int, help="first seed")
    sweep.add_argument("--workers", type=int, default=0, help="worker processes")
    sweep.add_argument("--plot", action="store_true", help="write SVG plots")

    deferral = commands.add_parser(
        "fig5",
        aliases=["deferral"],
        help="scripted deferral of three devices behind a jammer",
    )
    deferral.add_argument("--out", required=True, type=Path, help="output directory")

    aloha = commands.add_parser("aloha", help="pure-ALOHA utilisation sweep")
    aloha.add_argument("--out", required=True, type=Path, help="output directory")
    aloha.add_argument(
        "--loads",
        default=",".join(str(load) for load in DEFAULT_ALOHA_LOADS),
        help="comma separated offered loads",
    )
    aloha.add_argument("--seed", type=int, default=1, help="arrival seed")
    aloha.add_argument(
        "--frame-times", type=int, default=20_000, help="horizon in frame times"
    )
    return parser


def resolve_scenario(args: argparse.Namespace) -> ScenarioConfig:
    """Load the scenario and apply command line overrides."""
    config = load_scenario(args.scenario) if args.scenario else ScenarioConfig()
    energy = load_energy_params(args.energy_params) if args.energy_params else None
    return config.with_overrides(
        mode=args.mode,
        tps_policy=args.tps_policy,
        energy=energy,
        seed=getattr(args, "seed", None),
    )


def cmd_run(args: argparse.Namespace) -> int:
    """Run one scenario and write its results and traces."""
    config = resolve_scenario(args)
    if args.n_active is not None:
        config = config.with_overrides(n_active=args.n_active)
    outcome = ExperimentService(config, audit=args.audit).run()
    result = outcome.result

    exports = ExportService(args.out)
    exports.write_results([result.to_row()])
    exports.write_timeline(result.trace)
    exports.write_mac_log(result.mac_log)
    exports.write_energy_log(result.energy_log)
    exports.write_node_stats([result.stats])
    run_id = result.stats.run_id
    exports.write_metadata(
        RunMetadata(
            command="run",
            config=config.to_dict(),
            seeds=[result.seed],
            trace_hashes={run_id: result.trace_hash},
            event_counts={run_id: result.counters.to_dict()},
        )
    )
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    """Run a sweep and write rows, aggregates and optional plots."""
    config = resolve_scenario(args)
    spec = SweepSpec(
        n_values=parse_n_range(args.n_range),
        seeds=args.seeds,
        base_seed=config.seed,
        out_dir=args.out,
        workers=args.workers,
    )
    spec.validate(config.node_count)
    result = asyncio.run(SweepService(config, audit=args.audit).async_run_sweep(spec))

    exports = ExportService(args.out)
    exports.write_results(result.rows)
    exports.write_aggregate(result.aggregates)
    exports.write_metadata(
        RunMetadata(
            command="sweep",
            config=config.to_dict(),
            seeds=[seed for seed in range(spec.base_seed, spec.base_seed + spec.seeds)],
            trace_hashes=result.trace_hashes,
            event_counts=result.event_counts,
        )
    )
    if args.plot:
        PlotService().plot_aggregate(result.aggregates, args.out)
    return EXIT_OK


def cmd_scenario_fig5(args: argparse.Namespace) -> int:
    """Write the scripted deferral timeline."""
    timeline = ScenarioService().deferral_timeline()
    exports = ExportService(args.out)
    exports.write_timeline(timeline.trace)
    exports.write_mac_log(timeline.mac_log)
    exports.write_metadata(
        RunMetadata(command=args.command, config=timeline.to_dict(), seeds=[])
    )
    return EXIT_OK


def cmd_aloha(args: argparse.Namespace) -> int:
    """Write the pure-ALOHA utilisation sweep."""
    loads = parse_loads(args.loads)
    if args.frame_times < 1:
        raise ConfigError("must be at least 1", field="frame_times")
    rows = ScenarioService().aloha_sweep(loads, seed=args.seed, frame_times=args.frame_times)
    exports = ExportService(args.out)
    exports.write_aloha(rows)
    exports.write_metadata(
        RunMetadata(
            command="aloha",
            config={"loads": list(loads), "frame_times": args.frame_times},
            seeds=[args.seed],
        )
    )
    peak = max(rows, key=lambda row: row["utilization"])
    _LOGGER.info(
        f"Peak utilisation {peak['utilization']:.4f} at G={peak['offered_load']}"
    )
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "sweep": cmd_sweep,
    "fig5": cmd_scenario_fig5,
    "deferral": cmd_scenario_fig5,
    "aloha": cmd_aloha,
}


def configure_logging(verbose: bool, quiet: bool) -> None:
    """Configure the root logger once."""
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(
        level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s"
    )


def main(argv: Sequence[str] | None = None) -> int:
    """Entry point; returns the process exit code."""
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose, args.quiet)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as err:
        print(f"error: {err.diagnostic()}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except SimulationError as err:
        _LOGGER.error(f"Simulation failed: {err}")
        print(f"error: {err}", file=sys.stderr)
        return EXIT_RUNTIME_ERROR
