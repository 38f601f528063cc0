"""Figures written next to the CSV artifacts."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "figure.figsize": (5.5, 3.4),
    "figure.dpi": 110,
    "font.size": 9,
    "axes.linewidth": 0.6,
    "axes.grid": True,
    "grid.linewidth": 0.3,
    "grid.alpha": 0.5,
    "lines.linewidth": 1.0,
    "xtick.direction": "in",
    "ytick.direction": "in",
    "xtick.top": True,
    "ytick.right": True,
    "legend.fontsize": 8,
    "legend.frameon": False,
    "savefig.bbox": "tight",
}


def _save(fig, path):
    fig.savefig(path)
    plt.close(fig)
    return path


def track_figure(track, path):
    with plt.rc_context(STYLE):
        fig, (ax, ay) = plt.subplots(2, 1, sharex=True, figsize=(5.5, 4.6))
        ax.plot(track.grid, track.z, color="k")
        zl = track.zero_locations
        ax.plot(zl, np.zeros_like(zl), "o", ms=3, color="tab:red", label="zeros")
        ax.axhline(0.0, color="0.5", lw=0.5)
        ax.set_ylabel("z")
        ax.legend()
        y = np.arctan(track.riccati) if track.riccati is not None else np.zeros_like(track.grid)
        ay.plot(track.grid, y, color="tab:blue")
        ay.set_ylabel("arctan(-v z'/z)")
        ay.set_xlabel("t")
        pos = track.grid[track.grid > 0]
        if pos.size and pos[-1] / pos[0] > 1e3:
            ax.set_xscale("log")
            ax.set_xlim(pos[0], pos[-1])
        return _save(fig, path)


def critical_figure(t, columns: dict, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for name, vals in columns.items():
            vals = np.asarray(vals, dtype=float)
            if np.any(np.isfinite(vals)):
                ax.loglog(t, vals, label=name)
        ax.set_xlabel("t")
        ax.legend()
        return _save(fig, path)


def running_figure(cols: dict, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        t = cols["t"]
        ax.semilogx(t, cols["int_sqrt_A"], label="int sqrt(A)")
        ax.semilogx(t, cols["int_sqrt_chi"], label="int sqrt(chi)")
        ax.semilogx(t, cols["J"], label="J")
        ax.set_xlabel("t")
        ax.legend()
        return _save(fig, path)


def gaps_figure(records, bound, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        tau = np.array([r.tau for r in records])
        ax.plot(tau, [r.ratio for r in records], ".-", color="k", ms=3, label="T2/tau")
        if np.isfinite(bound):
            ax.axhline(bound, color="tab:red", ls="--", label="bound")
        ax.set_xlabel("tau")
        ax.legend()
        return _save(fig, path)


def spectral_figure(rows, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        R = [r["R"] for r in rows]
        for key, style in (("lower", "v-"), ("upper", "^-"), ("fd", "o")):
            ax.plot(R, [r[key] for r in rows], style, ms=3, label=key)
        ax.set_xlabel("R")
        ax.legend()
        return _save(fig, path)


def figure_path(csv_path: str) -> str:
    return os.path.splitext(csv_path)[0] + ".png"
