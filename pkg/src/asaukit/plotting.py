"""Figure rendering for the CLI report path (headless, deterministic PNGs)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .curves import CurveTable, SweepReport


def plot_curve_table(table: CurveTable, path, title: str) -> None:
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.plot(table.x_grid, table.target_values, "k--", lw=1.4, label="exact max")
    for s in table.series:
        ax.plot(table.x_grid, s.values, lw=1.0, label=s.label)
    ax.set_xlabel("x")
    ax.set_ylabel("activation(x)")
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def plot_sweep(report: SweepReport, path, title: str) -> None:
    fig, ax = plt.subplots(figsize=(5.4, 4.0))
    ax.loglog(report.betas, report.sup_errors, "o-")
    ax.set_xlabel("beta")
    ax.set_ylabel("sup |approx - max| on grid")
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def plot_histories(histories: dict[str, list], path, metric_name: str) -> None:
    """Validation-metric trajectories, one line per activation row."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    plotted = False
    for label, history in histories.items():
        if not history:
            continue
        epochs = [h[0] for h in history]
        metric = [h[2] for h in history]
        ax.plot(epochs, metric, lw=1.2, label=label)
        plotted = True
    ax.set_xlabel("epoch")
    ax.set_ylabel(metric_name)
    ax.set_title(f"validation {metric_name} by activation")
    ax.grid(True, alpha=0.3)
    if plotted:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
