"""Matplotlib rendering of run and sweep trajectories to image files."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .experiments import SweepReport  # noqa: E402
from .simulator import SimTrace  # noqa: E402


def plot_state_trajectories(trace: SimTrace, path: str | Path, title: str = "") -> None:
    """Per-node estimate q_s over time, with the exact average dashed."""
    if trace.records is None:
        raise ValueError("trace was not recorded with record_states='full'")
    steps = trace.executed_steps + 1
    series: list[list[float]] = [[] for _ in range(trace.n)]
    for r in trace.records:
        series[r.node].append(r.ys / r.zs)
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for j in range(trace.n):
        ax.plot(range(steps), series[j], linewidth=0.9)
    avg = sum(trace.y0) / trace.n
    ax.axhline(avg, linestyle="--", color="black", linewidth=1.2, label=f"average {avg:g}")
    if trace.steps_to_consensus is not None:
        ax.axvline(trace.steps_to_consensus, linestyle=":", color="gray", linewidth=1.0)
    ax.set_xlabel("step")
    ax.set_ylabel("node estimate")
    if title:
        ax.set_title(title)
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_mean_series(report: SweepReport, path: str | Path, title: str = "") -> None:
    """Mean estimate across nodes and trials, with the exact average dashed."""
    if report.mean_q is None:
        raise ValueError("sweep was not recorded with per-step means")
    fig, ax = plt.subplots(figsize=(8, 4.5))
    ax.plot(range(len(report.mean_q)), report.mean_q, linewidth=1.2)
    avg = float(report.exact_average)
    ax.axhline(avg, linestyle="--", color="black", linewidth=1.2, label=f"average {avg:g}")
    ax.set_xlabel("step")
    ax.set_ylabel("mean estimate")
    if title:
        ax.set_title(title)
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
