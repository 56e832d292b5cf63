"""Figures and gnuplot scripts for the CSV outputs.

Every function takes the same arrays that go into the CSV files and saves a
PNG; nothing is shown interactively.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_STYLE = {
    "figure.figsize": (5.0, 3.6),
    "figure.dpi": 120,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
    "legend.fontsize": 8,
    "legend.frameon": False,
}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_schedule(t, s, path, title=None):
    """s against t."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        ax.plot(t, s, lw=1.2)
        ax.set_xlabel("t")
        ax.set_ylabel("s(t)")
        ax.set_ylim(0.0, 1.0)
        if title:
            ax.set_title(title)
        return _save(fig, path)


def plot_failure_probability(s, p0, path, reference=None, title=None):
    """``1 - p_0`` against s on a log axis, optionally with a target profile."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        fail = np.clip(1.0 - np.asarray(p0), 1e-17, None)
        ax.semilogy(s, fail, lw=1.2, label="simulated")
        if reference is not None:
            ax.semilogy(s, np.clip(1.0 - np.asarray(reference), 1e-17, None), "--", lw=1.0, label="target")
            ax.legend()
        ax.set_xlabel("s")
        ax.set_ylabel("1 - p")
        if title:
            ax.set_title(title)
        return _save(fig, path)


def plot_levels(s, energies, path, title=None):
    """Lowest energy levels against s."""
    energies = np.atleast_2d(np.asarray(energies))
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        for k in range(energies.shape[1]):
            ax.plot(s, energies[:, k], lw=1.0, label=f"E{k}")
        ax.set_xlabel("s")
        ax.set_ylabel("energy")
        ax.legend()
        if title:
            ax.set_title(title)
        return _save(fig, path)


def plot_scaling(n, runtime, path, reference=None, ylabel="epsilon T", title=None):
    """Runtime against n on a log axis; ``reference`` is an optional
    ``(label, values)`` pair drawn as a dashed line."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        ax.semilogy(n, runtime, "o", ms=4, label="numeric")
        if reference is not None:
            label, values = reference
            ax.semilogy(n, values, "--", lw=1.0, label=label)
        ax.set_xlabel("n")
        ax.set_ylabel(ylabel)
        ax.legend()
        if title:
            ax.set_title(title)
        return _save(fig, path)


_GNUPLOT = {
    "schedule": ("t", "s(t)", "plot '{csv}' using 1:2 with lines title 's(t)'"),
    "trajectory": ("s", "1 - p_0", "set logscale y\nplot '{csv}' using 2:(1-$3) with lines title '1 - p_0'"),
    "scan": (
        "s",
        "energy",
        "plot '{csv}' using 1:2 with lines title 'E0', '' using 1:3 with lines title 'E1', "
        "'' using 1:4 with lines title 'E2'",
    ),
    "scaling": ("n", "runtime", "set logscale y\nplot '{csv}' using 1:2 with points pt 7 title 'runtime'"),
}


def gnuplot_script(kind: str, csv_name: str, png_name: str) -> str:
    """A standalone gnuplot script that plots one of the CSV outputs."""
    xlabel, ylabel, plot = _GNUPLOT[kind]
    return (
        "set datafile separator ','\n"
        "set key autotitle columnhead\n"
        "set terminal pngcairo size 800,560\n"
        f"set output '{png_name}'\n"
        f"set xlabel '{xlabel}'\n"
        f"set ylabel '{ylabel}'\n"
        + plot.format(csv=csv_name)
        + "\n"
    )
