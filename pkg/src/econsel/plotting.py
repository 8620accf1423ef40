"""Static SVG figures: selection maps, cost sweeps, wave strips, timing curves.

Figures are drawn on bare :class:`matplotlib.figure.Figure` objects (no
pyplot state) and serialized with a fixed SVG hash salt and no date stamp,
so identical inputs give byte-identical documents. Each column of cells is
emitted as one SVG group with id ``col-<i>``.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import numpy as np
from matplotlib.collections import PatchCollection
from matplotlib.figure import Figure
from matplotlib.patches import Rectangle

from .lattice import PredictorSet

GRAY_STEPS = 8
WEAK_FILL = "#8c8c8c"

_RC = {
    "svg.hashsalt": "econsel",
    "svg.fonttype": "none",
    "font.family": "DejaVu Sans",
    "font.size": 8,
    "axes.linewidth": 0.6,
    "path.simplify": False,
}


def gray_hex(prob: float) -> str:
    """Fill color whose darkness encodes an inclusion probability.

    Probabilities are quantized to an 8-step ramp; 1 maps to black, 0 to white.
    """
    level = int(round(float(np.clip(prob, 0.0, 1.0)) * (GRAY_STEPS - 1)))
    v = int(round(255 * (1 - level / (GRAY_STEPS - 1))))
    return f"#{v:02x}{v:02x}{v:02x}"


def _to_svg(fig: Figure) -> str:
    buf = io.StringIO()
    with matplotlib.rc_context(_RC):
        fig.savefig(buf, format="svg", metadata={"Date": None})
    return buf.getvalue()


def _new_figure(width, height) -> Figure:
    with matplotlib.rc_context(_RC):
        return Figure(figsize=(width, height))


def _draw_grid(ax, columns, names, weak=None):
    """Draw one column of cells per inclusion vector in ``columns``."""
    p = len(names)
    for i, incl in enumerate(columns):
        fills = [gray_hex(v) for v in incl]
        if weak is not None and i == 0:
            fills = [WEAK_FILL if w else f for f, w in zip(fills, weak)]
        # row 0 at the top
        rects = [Rectangle((i, p - 1 - j), 1, 1) for j in range(p)]
        coll = PatchCollection(rects, facecolors=fills, edgecolors="none")
        coll.set_gid(f"col-{i}")
        ax.add_collection(coll)
    ax.set_xlim(0, max(len(columns), 1))
    ax.set_ylim(0, p)
    ax.set_yticks(np.arange(p) + 0.5)
    ax.set_yticklabels(list(reversed(names)))
    ax.tick_params(length=0)


@dataclass
class SelectionMapSpec:
    """Ranked purchased sets with their inclusion probabilities.

    ``entries`` are ``(PredictorSet, loss, inclusion vector)`` in ascending
    loss order. ``markers`` maps a label to a set bitmask; a vertical line is
    drawn at that set's rank if it survives the ``top_k`` cut.
    """

    entries: list
    names: Sequence[str]
    markers: Dict[str, int] = field(default_factory=dict)
    top_k: Optional[int] = None
    gray_threshold: float = 0.7
    title: str = ""

    def __post_init__(self):
        if not 0 <= self.gray_threshold <= 1:
            raise ValueError("gray_threshold must lie in [0, 1]")
        losses = [e[1] for e in self.entries]
        if any(b < a for a, b in zip(losses, losses[1:])):
            raise ValueError("entries must be in ascending loss order")

    def shown(self) -> list:
        return self.entries if self.top_k is None else self.entries[:self.top_k]

    def marker_positions(self) -> Dict[str, int]:
        ranks = {e[0].bits: i for i, e in enumerate(self.shown())}
        return {label: ranks[b] for label, b in self.markers.items() if b in ranks}


def selection_map_spec(table, top_k=None, gray_threshold=0.7, title="") -> SelectionMapSpec:
    """Build a selection-map spec from a :class:`~econsel.bma.CvLossTable`."""
    from .bma import rank_sets

    incl = table.inclusion_all()
    entries = [(s, loss, incl[s.bits]) for s, loss in rank_sets(table)]
    markers = {"N": 0, "F": (1 << table.p) - 1}
    return SelectionMapSpec(entries, table.names, markers, top_k, gray_threshold, title)


def render_selection_map(spec: SelectionMapSpec) -> str:
    """Loss curve above a predictor-by-set grid; returns an SVG document."""
    shown = spec.shown()
    if not shown:
        raise ValueError("selection map needs at least one entry")
    names = list(spec.names)
    ncol = len(shown)
    fig = _new_figure(7.0, 2.0 + 0.22 * len(names))
    with matplotlib.rc_context(_RC):
        gs = fig.add_gridspec(2, 1, height_ratios=[1.0, 0.12 * len(names) + 0.4], hspace=0.05)
        ax_loss = fig.add_subplot(gs[0])
        ax_map = fig.add_subplot(gs[1], sharex=ax_loss)
        xs = np.arange(ncol) + 0.5
        ax_loss.plot(xs, [e[1] for e in shown], color="black", lw=0.8, gid="loss-curve")
        ax_loss.set_ylabel("loss")
        ax_loss.tick_params(labelbottom=False)
        for label, pos in sorted(spec.marker_positions().items()):
            ax_loss.axvline(pos + 0.5, color="black", lw=0.6, gid=f"marker-{label}")
            ax_loss.annotate(label, (pos + 0.5, 1.0), xycoords=("data", "axes fraction"),
                             ha="center", va="bottom")
        best = shown[0]
        members = np.zeros(len(names), dtype=bool)
        members[list(best[0].members)] = True
        weak = members & (np.asarray(best[2]) < spec.gray_threshold)
        _draw_grid(ax_map, [e[2] for e in shown], names, weak)
        ax_map.set_xlabel("combinations ranked by loss")
        ax_map.set_xticks([])
        if spec.title:
            ax_loss.set_title(spec.title, pad=14)
    return _to_svg(fig)


def render_cost_sweep(sweep, names, title="") -> str:
    """One column per grid price showing the optimum's inclusion probabilities."""
    if not sweep:
        raise ValueError("cost sweep needs at least one price")
    names = list(names)
    fig = _new_figure(max(3.0, 0.25 * len(sweep) + 1.5), 0.9 + 0.22 * len(names))
    with matplotlib.rc_context(_RC):
        ax = fig.add_subplot(1, 1, 1)
        _draw_grid(ax, [res.inclusion for res in sweep], names)
        ax.set_xticks(np.arange(len(sweep)) + 0.5)
        ax.set_xticklabels([f"{res.price:g}" for res in sweep], rotation=90)
        ax.set_xlabel("price")
        if title:
            ax.set_title(title)
        fig.subplots_adjust(bottom=0.3)
    return _to_svg(fig)


def render_wave_strips(columns, names, waves, title="") -> str:
    """Least-loss set per wave as columns of inclusion probabilities."""
    if not columns:
        raise ValueError("wave strips need at least one wave")
    names = list(names)
    fig = _new_figure(max(3.0, 0.25 * len(columns) + 1.5), 0.9 + 0.22 * len(names))
    with matplotlib.rc_context(_RC):
        ax = fig.add_subplot(1, 1, 1)
        _draw_grid(ax, columns, names)
        ax.set_xticks(np.arange(len(columns)) + 0.5)
        ax.set_xticklabels([str(w) for w in waves])
        ax.set_xlabel("wave")
        if title:
            ax.set_title(title)
    return _to_svg(fig)


def render_timing_curves(results, title="") -> str:
    """Small multiples of the purchase-timing objective, one panel per discount factor.

    ``results`` is a sequence of ``(TimedPurchaseProblem, TimingSolution)``.
    Each panel draws one curve per price; position ``T + 1`` (labelled N) is
    never purchasing. Minimizing waves are marked with dots.
    """
    if not results:
        raise ValueError("timing plot needs at least one problem")
    deltas = sorted({prob.delta for prob, _ in results})
    ncols = min(2, len(deltas))
    nrows = -(-len(deltas) // ncols)
    fig = _new_figure(3.2 * ncols, 2.4 * nrows)
    with matplotlib.rc_context(_RC):
        for di, delta in enumerate(deltas):
            ax = fig.add_subplot(nrows, ncols, di + 1)
            panel = [(pr, so) for pr, so in results if pr.delta == delta]
            for ci, (prob, sol) in enumerate(sorted(panel, key=lambda r: r[0].c)):
                t = np.arange(1, prob.T + 2)
                ax.plot(t, sol.curve, color="0.55", lw=0.8, gid=f"curve-{di}-{ci}")
                mins = np.array(sol.minimizers)
                ax.scatter(mins, sol.curve[mins - 1], s=10, color="black", zorder=3,
                           gid=f"dots-{di}-{ci}")
            T = results[0][0].T
            ticks = list(range(1, T + 2))
            ax.set_xticks(ticks)
            ax.set_xticklabels([str(v) for v in ticks[:-1]] + ["N"], fontsize=6)
            ax.set_title(f"discount {delta:g}")
            ax.set_xlabel("purchase wave")
        if title:
            fig.suptitle(title)
        fig.tight_layout()
    return _to_svg(fig)


def write_svg(svg: str, path) -> None:
    from pathlib import Path

    path = Path(path)
    try:
        path.write_text(svg, encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write figure to {path}: {exc}") from exc
