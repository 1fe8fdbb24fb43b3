"""Report figures.  Uses the non-interactive Agg backend; files only."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .liquidity import RatioReport  # noqa: E402

RATIO_NAMES = ("cash", "quick", "current")
COLORS = ("#4c72b0", "#dd8452", "#55a868")


def _finish(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_circulation_series(seqs: Sequence[int], totals: Sequence[int], path: Path) -> Path:
    """Coins and bonds held by non-issuers, after each traced event."""
    fig, ax = plt.subplots(figsize=(7, 3.5))
    ax.step(seqs, totals, where="post", color=COLORS[0], lw=1.5)
    ax.set_xlabel("trace seq")
    ax.set_ylabel("in circulation")
    ax.set_ylim(bottom=0)
    ax.grid(alpha=0.3)
    for side in ("top", "right"):
        ax.spines[side].set_visible(False)
    return _finish(fig, path)


def plot_ratios(reports: Sequence[RatioReport], path: Path) -> Path:
    """Grouped bars per agent; undefined ratios are left out and marked."""
    fig, ax = plt.subplots(figsize=(max(4, 1.3 * len(reports) + 2), 3.5))
    width = 0.8 / len(RATIO_NAMES)
    for j, name in enumerate(RATIO_NAMES):
        xs, ys = [], []
        for i, rep in enumerate(reports):
            value = getattr(rep, name)
            if value is not None:
                xs.append(i + (j - 1) * width)
                ys.append(float(value))
        ax.bar(xs, ys, width, label=name, color=COLORS[j])
    for i, rep in enumerate(reports):
        if not rep.defined:
            ax.text(i, 0.02, "—", ha="center", va="bottom")
    ax.axhline(1.0, color="0.5", lw=0.8, ls="--")
    ax.set_xticks(range(len(reports)))
    ax.set_xticklabels([r.agent for r in reports])
    ax.set_ylabel("ratio")
    ax.legend(frameon=False, ncol=3, fontsize="small")
    return _finish(fig, path)


def plot_holdings(holders: Sequence[str], issuers: Sequence[str], counts: dict, path: Path) -> Path:
    """Heat map of who holds whose bonds: rows holders, columns issuers."""
    grid = [[counts.get((h, i), 0) for i in issuers] for h in holders]
    fig, ax = plt.subplots(figsize=(max(4, 0.6 * len(issuers) + 2), max(3, 0.45 * len(holders) + 1.5)))
    im = ax.imshow(grid, cmap="Blues", aspect="auto")
    ax.set_xticks(range(len(issuers)))
    ax.set_xticklabels(issuers, rotation=45, ha="right")
    ax.set_yticks(range(len(holders)))
    ax.set_yticklabels(holders)
    ax.set_xlabel("issuer")
    ax.set_ylabel("holder")
    if len(holders) * len(issuers) <= 400:
        for r, row in enumerate(grid):
            for c, n in enumerate(row):
                if n:
                    ax.text(c, r, str(n), ha="center", va="center", fontsize=7)
    fig.colorbar(im, ax=ax, shrink=0.8)
    return _finish(fig, path)
