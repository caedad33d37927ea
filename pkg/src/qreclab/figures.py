"""Figure rendering for the CLI report path.

Every figure is written next to the delimited table it visualizes, using the
headless Agg backend so runs work without a display.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["render_sweep_figure", "render_povm_figure"]


def render_sweep_figure(rows, path) -> None:
    """Frontier of achievable tag distinguishability versus original overlap."""
    s = [r[0] for r in rows]
    d = [max(r[1], 1e-18) for r in rows]
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    ax.semilogy(s, d, "o-", color="tab:blue", lw=1.2, ms=4)
    ax.set_xlabel("overlap of the originals")
    ax.set_ylabel("best repeatable tag distinguishability")
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_povm_figure(rows, path) -> None:
    """Outcome-pair probability table as a heatmap."""
    ks = sorted({r[0] for r in rows})
    ls = sorted({r[1] for r in rows})
    grid = np.zeros((len(ks), len(ls)))
    for k, l, p in rows:
        grid[ks.index(k), ls.index(l)] = p
    fig, ax = plt.subplots(figsize=(4.2, 3.6))
    im = ax.imshow(grid, cmap="viridis", vmin=0.0)
    ax.set_xlabel("second outcome l")
    ax.set_ylabel("first outcome k")
    ax.set_xticks(range(len(ls)), [str(l) for l in ls])
    ax.set_yticks(range(len(ks)), [str(k) for k in ks])
    for i in range(len(ks)):
        for j in range(len(ls)):
            ax.text(j, i, f"{grid[i, j]:.3f}", ha="center", va="center",
                    color="w" if grid[i, j] < 0.7 * grid.max() else "k", fontsize=8)
    fig.colorbar(im, ax=ax, label="probability")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
