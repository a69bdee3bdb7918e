"""Plot Service - Static SVG figures of a sweep aggregate."""

import logging
from pathlib import Path
from typing import List

from ..const import PLOT_ENERGY_FILE, PLOT_THROUGHPUT_FILE
from ..models import AggregateRow

_LOGGER = logging.getLogger(__name__)

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:  # pragma: no cover - optional dependency
    plt = None


class PlotService:
    """Service for rendering throughput and energy over the active-set size."""

    @property
    def available(self) -> bool:
        """Whether matplotlib could be imported."""
        return plt is not None

    def plot_aggregate(self, rows: List[AggregateRow], out_dir: Path) -> List[Path]:
        """
        Write ``throughput.svg`` and ``energy.svg``.

        Args:
            rows: Aggregate rows of a sweep
            out_dir: Output directory

        Returns:
            Paths of the written files, empty if matplotlib is missing
        """
        if plt is None:
            _LOGGER.warning("matplotlib is not installed, skipping plots")
            return []
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        ordered = sorted(rows, key=lambda row: row.n_active)
        n_values = [row.n_active for row in ordered]
        written = []

        fig, ax = plt.subplots(figsize=(6, 4))
        defined = [row for row in ordered if row.throughput_mean is not None]
        ax.errorbar(
            [row.n_active for row in defined],
            [row.throughput_mean for row in defined],
            yerr=[row.throughput_std or 0.0 for row in defined],
            marker="o",
            capsize=3,
        )
        ax.set_xlabel("Concurrently replying nodes")
        ax.set_ylabel("Throughput")
        ax.set_ylim(0, 1.05)
        ax.grid(True, alpha=0.3)
        path = out_dir / PLOT_THROUGHPUT_FILE
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        written.append(path)

        fig, ax = plt.subplots(figsize=(6, 4))
        ax.errorbar(
            n_values,
            [row.energy_mean_mj for row in ordered],
            yerr=[row.energy_node_std_mj for row in ordered],
            marker="s",
            capsize=3,
        )
        ax.set_xlabel("Concurrently replying nodes")
        ax.set_ylabel("Radio energy per node [mJ]")
        ax.grid(True, alpha=0.3)
        path = out_dir / PLOT_ENERGY_FILE
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        written.append(path)

        _LOGGER.info(f"Wrote plots to {out_dir}")
        return written
