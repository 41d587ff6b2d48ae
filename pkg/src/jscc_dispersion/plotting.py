"""Line plots of CDF and ratio curves, rendered off-screen to PNG."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def line_plot(
    path,
    x,
    series: Sequence[tuple[str, Sequence[float], dict]],
    xlabel: str = "R",
    ylabel: str = "",
    title: str = "",
    ylim: tuple[float, float] | None = None,
) -> Path:
    """Draw each ``(label, y, style)`` against ``x`` and save to ``path``."""
    fig, ax = plt.subplots(figsize=(6.0, 4.2), dpi=120)
    for label, y, style in series:
        ax.plot(x, y, label=label, **style)
    ax.set_xlabel(xlabel)
    if ylabel:
        ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if ylim is not None:
        ax.set_ylim(*ylim)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    # no Software/date metadata so reruns are byte-identical
    fig.savefig(p, metadata={"Software": None})
    plt.close(fig)
    return p
