"""Optional trajectory figure, rendered off-screen."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .integrator import TrajectoryRecord


def trajectory_figure(record: TrajectoryRecord, path, title: str | None = None) -> Path:
    """Write a PNG with one strategy panel per player and an energy panel."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    n = len(record.sizes)
    fig, axes = plt.subplots(n + 1, 1, figsize=(7, 2.4 * (n + 1)), sharex=True, squeeze=False)
    offsets = np.concatenate([[0], np.cumsum(record.sizes)])
    for k in range(n):
        ax = axes[k, 0]
        for a in range(record.sizes[k]):
            ax.plot(record.t, record.x[:, offsets[k] + a], label=f"x_{k + 1}_{a}")
        ax.set_ylim(-0.02, 1.02)
        ax.set_ylabel(f"player {k + 1}")
        ax.legend(loc="best", fontsize="small")
    ax = axes[n, 0]
    ax.plot(record.t, record.K, label="K")
    if np.all(np.isfinite(record.E)):
        ax.plot(record.t, record.E, label="E")
    ax.set_xlabel("t")
    ax.legend(loc="best", fontsize="small")
    t_star = record.termination.t_star
    if t_star is not None:
        for row in axes[:, 0]:
            row.axvline(t_star, color="grey", linestyle=":")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=100, metadata={"Software": None})
    plt.close(fig)
    return path
