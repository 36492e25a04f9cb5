"""
Static figures for validation and analysis reports.

Everything is rendered off-screen to SVG. The date stamp is dropped and the
SVG id salt is fixed so that identical inputs give byte-identical files.
"""

from __future__ import annotations

from contextlib import contextmanager
from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

GROUP_COLORS = {"original": "#4477aa", "regenerated": "#ee6677", "segmented": "#228833"}

_RC = {
    "svg.hashsalt": "stylseg",
    "svg.fonttype": "path",
    "font.family": "DejaVu Sans",
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "figure.dpi": 100,
}


def figsize(scale: float = 1.0, ratio: float | None = None) -> tuple[float, float]:
    golden = (np.sqrt(5.0) - 1.0) / 2.0
    width = 6.0 * scale
    return width, width * (ratio or golden)


@contextmanager
def _style():
    with plt.rc_context(_RC):
        yield


def save(fig, path: Path) -> Path:
    path = Path(path)
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)
    return path


def threshold_histogram(groups: Mapping[str, Sequence[float]], path: Path, bins: int = 20,
                        xlabel: str = "PELT threshold multiplier") -> Path:
    with _style():
        fig, ax = plt.subplots(figsize=figsize())
        allv = np.concatenate([np.asarray(v, float) for v in groups.values()])
        edges = np.histogram_bin_edges(allv, bins=bins)
        for label, values in groups.items():
            ax.hist(values, bins=edges, alpha=0.55, label=f"{label} (n={len(values)})",
                    color=GROUP_COLORS.get(label))
        ax.set_xlabel(xlabel)
        ax.set_ylabel("documents")
        ax.legend(frameon=False)
        return save(fig, path)


def score_histogram(groups: Mapping[str, Sequence[float]], path: Path, bins: int = 30) -> Path:
    """Histogram of total log odds with a log-scaled count axis."""
    with _style():
        fig, ax = plt.subplots(figsize=figsize())
        allv = np.concatenate([np.asarray(v, float) for v in groups.values()])
        edges = np.histogram_bin_edges(allv, bins=bins)
        for label, values in groups.items():
            ax.hist(values, bins=edges, alpha=0.55, label=label, color=GROUP_COLORS.get(label))
        ax.set_yscale("log")
        ax.axvline(0.0, color="0.3", lw=0.8, ls="--")
        ax.set_xlabel("total log odds (nats)")
        ax.set_ylabel("documents")
        ax.legend(frameon=False)
        return save(fig, path)


def confusion_plot(matrix: Sequence[Sequence[int]], labels: Sequence[str], path: Path) -> Path:
    m = np.asarray(matrix)
    with _style():
        fig, ax = plt.subplots(figsize=figsize(0.6, 0.9))
        ax.imshow(m, cmap="Blues")
        for (i, j), v in np.ndenumerate(m):
            ax.text(j, i, str(v), ha="center", va="center",
                    color="white" if v > m.max() / 2 else "black")
        ax.set_xticks(range(len(labels)), labels)
        ax.set_yticks(range(len(labels)), labels)
        ax.set_xlabel("predicted")
        ax.set_ylabel("actual")
        return save(fig, path)


def length_scatter(lengths: Sequence[float], panels: Mapping[str, Sequence[float]], path: Path,
                   title: str = "") -> Path:
    """One scatter panel per variable against document length."""
    with _style():
        fig, axes = plt.subplots(1, len(panels), figsize=figsize(1.2, 0.4), squeeze=False)
        for ax, (label, values) in zip(axes[0], panels.items()):
            ax.scatter(lengths, values, s=6, alpha=0.6, color="#4477aa", linewidths=0)
            ax.set_xlabel("length (tokens)")
            ax.set_ylabel(label)
        if title:
            fig.suptitle(title)
        fig.tight_layout()
        return save(fig, path)


def pair_scatter(x: Sequence[float], y: Sequence[float], path: Path, xlabel: str, ylabel: str) -> Path:
    with _style():
        fig, ax = plt.subplots(figsize=figsize(0.7))
        ax.scatter(x, y, s=6, alpha=0.6, color="#ee6677", linewidths=0)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        return save(fig, path)
