"""Report figures: rendered to files next to the delimited outputs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from clickseg.bench.timing import TimingRecord, timing_average


def plot_loss_curve(totals: list[float], path: str | Path) -> None:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(totals, lw=1.2)
    ax.set_xlabel("step")
    ax.set_ylabel("loss")
    ax.set_title("training loss")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_iou_vs_clicks(traces: list[list[float]], path: str | Path) -> None:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    longest = max((len(t) for t in traces), default=0)
    for trace in traces:
        ax.plot(range(1, len(trace) + 1), trace, color="tab:blue", alpha=0.15, lw=0.8)
    if longest:
        # Mean over the traces still running at each click count.
        means = []
        for i in range(longest):
            values = [t[i] for t in traces if len(t) > i]
            means.append(float(np.mean(values)))
        ax.plot(range(1, longest + 1), means, color="tab:red", lw=2, label="mean")
        ax.legend()
    ax.set_xlabel("clicks")
    ax.set_ylabel("IoU")
    ax.set_ylim(0, 1)
    ax.set_title("IoU vs. clicks")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_noc_histogram(nocs: list[int], path: str | Path, *, max_clicks: int = 20) -> None:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.hist(nocs, bins=np.arange(0.5, max_clicks + 1.5), edgecolor="black", alpha=0.8)
    ax.set_xlabel("clicks to target")
    ax.set_ylabel("samples")
    ax.set_title("NoC distribution")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_time_per_click(t_f1: float, t_f2: float, path: str | Path, *, max_clicks: int = 20) -> None:
    """The amortization curve: per-interaction cost against click count."""
    clicks = np.arange(1, max_clicks + 1)
    averages = [timing_average(TimingRecord(t_f1, t_f2, int(n))) for n in clicks]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(clicks, averages, marker="o", ms=3, label="average per interaction")
    ax.axhline(t_f2, color="tab:gray", ls="--", lw=1, label="stage-2 floor")
    ax.set_xlabel("clicks in session")
    ax.set_ylabel("ms per interaction")
    ax.set_title("per-interaction cost amortization")
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
