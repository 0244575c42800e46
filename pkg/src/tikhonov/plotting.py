"""Comparison figures written next to the CLI's CSV output.

Figures are drawn on a bare ``Figure`` with the Agg canvas, so importing this
module never touches pyplot's global state or the user's backend.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
from matplotlib import rc_context
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
WIDTH_IN = 6.0

STYLE = {
    "font.family": "serif",
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 9,
    "legend.fontsize": 8,
    "legend.frameon": False,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "xtick.direction": "in",
    "ytick.direction": "in",
    "axes.spines.top": False,
    "axes.spines.right": False,
    "lines.linewidth": 1.1,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
    "mathtext.fontset": "stix",
}

FULL, REDUCED, COMPOSITE = "#1b4f72", "#c0392b", "#229954"


def _new_figure(rows: int, height_per_row: float) -> Figure:
    fig = Figure(figsize=(WIDTH_IN, max(2.0, rows * height_per_row)))
    FigureCanvasAgg(fig)
    return fig


def plot_run(path, t, u_full, v_full, u_reduced, v_qss, v_composite, err_u, err_v, err_composite,
             u_names, v_names, title: str = "") -> Path:
    """One panel per component (full against reduced or composite) plus an error panel."""
    path = Path(path)
    comps = [(u_full[:, i], u_reduced[:, i], None, name) for i, name in enumerate(u_names)]
    comps += [(v_full[:, j], v_qss[:, j], v_composite[:, j], name) for j, name in enumerate(v_names)]
    with rc_context(STYLE):
        fig = _new_figure(len(comps) + 1, WIDTH_IN * GOLDEN / 2.0)
        axes = fig.subplots(len(comps) + 1, 1, sharex=True)
        for ax, (full, red, comp, name) in zip(axes, comps):
            ax.plot(t, full, color=FULL, label="full")
            ax.plot(t, red, color=REDUCED, ls="--", label="reduced" if comp is None else "quasi-steady state")
            if comp is not None:
                ax.plot(t, comp, color=COMPOSITE, ls=":", label="composite")
            ax.set_ylabel(name)
            ax.legend(loc="best")
        ax = axes[-1]
        floor = 1e-16
        ax.semilogy(t, np.maximum(err_u, floor), color=FULL, label="slow error")
        ax.semilogy(t, np.maximum(err_v, floor), color=REDUCED, ls="--", label="fast error vs QSS")
        ax.semilogy(t, np.maximum(err_composite, floor), color=COMPOSITE, ls=":", label="fast error vs composite")
        ax.set_ylabel("error")
        ax.set_xlabel("t")
        ax.legend(loc="best")
        if title:
            axes[0].set_title(title)
        fig.savefig(path)
    return path


def plot_sweep(path, eps, series: dict, orders: dict, title: str = "") -> Path:
    """Log-log error against eps, one line per named series; fitted orders go in the legend."""
    path = Path(path)
    eps = np.asarray(eps, float)
    with rc_context(STYLE):
        fig = _new_figure(1, WIDTH_IN * GOLDEN)
        ax = fig.subplots()
        for (name, values), color in zip(series.items(), (FULL, REDUCED, COMPOSITE, "0.4")):
            order = orders.get(name)
            label = name if order is None else f"{name} (order {order:.2f})"
            ax.loglog(eps, np.asarray(values, float), "o-", color=color, label=label)
        ax.set_xlabel(r"$\varepsilon$")
        ax.set_ylabel("sup-norm error")
        ax.legend(loc="best")
        if title:
            ax.set_title(title)
        fig.savefig(path)
    return path
