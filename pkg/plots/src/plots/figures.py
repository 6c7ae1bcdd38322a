"""Figure rendering.

Convergence figures plot (log2 h, log2 e_h) with one line per scheme
and dashed reference-slope overlays anchored at the first series'
largest-h point.  Paths figures overlay every trajectory with a zero
line as the positivity reference.  render() also returns the plotted
series so callers can verify the axis transform without scraping the
image.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .reader import read_convergence, read_paths

__all__ = ["FigureKind", "FigureSpec", "RenderResult", "render"]


class FigureKind(enum.Enum):
    CONVERGENCE = "convergence"
    PATHS = "paths"


@dataclass(frozen=True)
class FigureSpec:
    """One figure: source CSV, kind, output image and styling knobs."""

    source: str
    kind: FigureKind
    out_path: str
    slopes: tuple[float, ...] = (0.5, 1.0)
    title: str | None = None

    def __post_init__(self) -> None:
        if not self.out_path:
            raise ValueError("out_path must be a non-empty file name")
        if any(not math.isfinite(s) for s in self.slopes):
            raise ValueError(f"slopes must be finite, got {self.slopes}")


@dataclass(frozen=True)
class RenderResult:
    """Where the image went plus the exact series that were drawn."""

    out_path: str
    series: dict[str, tuple[np.ndarray, np.ndarray]] = field(repr=False)
    overlays: tuple[str, ...]


def _render_convergence(spec: FigureSpec) -> RenderResult:
    table = read_convergence(spec.source)
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    series: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    for scheme in table.schemes:
        x = np.log2(table.h[scheme])
        y = np.log2(table.e_h[scheme])
        ax.plot(x, y, marker="o", label=scheme)
        series[scheme] = (x, y)

    # dashed guides: y = y0 + s (x - x0), anchored at the first series'
    # coarsest (largest-h) point so every guide passes through the data
    first = table.schemes[0]
    x0_idx = int(np.argmax(series[first][0]))
    x0, y0 = series[first][0][x0_idx], series[first][1][x0_idx]
    all_x = np.concatenate([xy[0] for xy in series.values()])
    xs = np.array([all_x.min(), all_x.max()])
    overlays = []
    for s in spec.slopes:
        label = f"slope {s:g}"
        ax.plot(xs, y0 + s * (xs - x0), linestyle="--", linewidth=1.0, label=label)
        overlays.append(label)

    ax.set_xlabel("log2 h")
    ax.set_ylabel("log2 e_h")
    ax.grid(True, alpha=0.3)
    ax.legend()
    if spec.title:
        ax.set_title(spec.title)
    fig.savefig(spec.out_path, bbox_inches="tight")
    plt.close(fig)
    return RenderResult(spec.out_path, series, tuple(overlays))


def _render_paths(spec: FigureSpec) -> RenderResult:
    table = read_paths(spec.source)
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    series: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    for pid in table.path_ids:
        t, y = table.times[pid], table.states[pid]
        ax.plot(t, y, linewidth=0.8)
        series[f"path {pid}"] = (t, y)
    ax.axhline(0.0, color="black", linewidth=0.8)
    ax.set_xlabel("t")
    ax.set_ylabel("y")
    ax.grid(True, alpha=0.3)
    if spec.title:
        ax.set_title(spec.title)
    fig.savefig(spec.out_path, bbox_inches="tight")
    plt.close(fig)
    return RenderResult(spec.out_path, series, ("y = 0",))


def render(spec: FigureSpec) -> RenderResult:
    """Validate the CSV, draw the figure, write spec.out_path."""
    if spec.kind is FigureKind.CONVERGENCE:
        return _render_convergence(spec)
    return _render_paths(spec)
