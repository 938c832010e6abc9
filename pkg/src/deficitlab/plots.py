"""Byte-stable SVG line charts."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_RC = {"svg.hashsalt": "deficitlab", "svg.fonttype": "none", "figure.figsize": (6.4, 4.2)}


def line_chart(
    path: Path,
    series: Sequence[tuple[str, Sequence[float], Sequence[float]]],
    xlabel: str,
    ylabel: str,
    title: str = "",
    logy: bool = False,
    styles: Sequence[str] | None = None,
) -> Path:
    """One line per (label, x, y) triple; no timestamps in the output."""
    path = Path(path)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        for i, (label, x, y) in enumerate(series):
            ax.plot(x, y, styles[i] if styles else "-o", label=label, markersize=3, linewidth=1.2)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        if logy:
            ax.set_yscale("log")
        if series:
            ax.legend(fontsize="small")
        ax.grid(alpha=0.3)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
        plt.close(fig)
    return path
