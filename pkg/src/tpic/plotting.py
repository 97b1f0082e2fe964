"""Figures for grid reports and energy histories (Agg backend, files only)."""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .io.report import GridReport  # noqa: E402


def plot_report(report: GridReport, path, cmap: str | None = None) -> Path:
    """Colour map of a report's payload with physical axes."""
    data = report.data
    if cmap is None:
        cmap = "RdBu_r" if data.min() < 0 < data.max() else "viridis"
    fig, ax = plt.subplots(figsize=(5.5, 4.5))
    extent = (0.0, report.nx * report.dx, 0.0, report.ny * report.dy)
    if cmap == "RdBu_r":
        lim = float(abs(data).max()) or 1.0
        im = ax.imshow(data, origin="lower", extent=extent, cmap=cmap, vmin=-lim, vmax=lim)
    else:
        im = ax.imshow(data, origin="lower", extent=extent, cmap=cmap)
    fig.colorbar(im, ax=ax)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title(f"{report.name}, t = {report.time:.3g}")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return path


def plot_energy(rows: Sequence[dict], path) -> Path:
    """Field and kinetic energy against time on a log scale."""
    fig, ax = plt.subplots(figsize=(6, 4))
    t = [r["time"] for r in rows]
    for key, label in (("field_e", "electric"), ("field_b", "magnetic"), ("kinetic", "kinetic")):
        vals = [r[key] for r in rows]
        if any(v > 0 for v in vals):
            ax.semilogy(t, [v if v > 0 else float("nan") for v in vals], label=label)
    ax.set_xlabel("time")
    ax.set_ylabel("energy")
    if ax.get_lines():
        ax.legend()
    else:
        ax.text(0.5, 0.5, "all energies are zero", ha="center", transform=ax.transAxes)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return path
