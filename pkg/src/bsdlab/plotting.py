"""Figures for the report directory (Agg backend, written atomically)."""

from __future__ import annotations

import os
import tempfile

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "figure.figsize": (4.8, 3.4),
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 120,
}


def _save(fig, path):
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=folder, suffix=".png.tmp")
    os.close(fd)
    try:
        fig.savefig(tmp, format="png", bbox_inches="tight")
        os.replace(tmp, path)
    finally:
        plt.close(fig)
        if os.path.exists(tmp):
            os.remove(tmp)
    return path


def index_figure(levels, values, bound, path, title=""):
    """Index sequence against the slot levels, with the admissible cap."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        xs = [0.0] + [float(x) for x in levels]
        ys = [0] + list(values)
        ax.plot(xs, ys, "o-", color="C0", label="$i_r$")
        ax.plot(xs, xs, ":", color="0.5", label="$i_r = r$")
        ax.axhline(bound, color="C3", lw=0.8, ls="--", label="cap")
        ax.set_xlabel("level r")
        ax.set_ylabel("index")
        ax.set_title(title)
        ax.legend(frameon=False, loc="upper left")
        return _save(fig, path)


def checks_figure(counts, path, title=""):
    """Stacked pass/fail bars, one per check family."""
    names = list(counts)
    passed = [counts[k][0] for k in names]
    failed = [counts[k][1] for k in names]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.bar(names, passed, color="C2", label="pass")
        ax.bar(names, failed, bottom=passed, color="C3", label="fail")
        ax.set_ylabel("samples")
        ax.set_title(title)
        ax.tick_params(axis="x", rotation=30)
        ax.legend(frameon=False)
        return _save(fig, path)


def distance_figure(d_source, d_image, path, title=""):
    """Kobayashi distances before and after the standard factor."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.scatter(d_source, d_image, s=10, color="C0")
        hi = max(max(d_source, default=1.0), max(d_image, default=1.0))
        ax.plot([0, hi], [0, hi], color="0.5", lw=0.8)
        ax.set_xlabel("source distance")
        ax.set_ylabel("distance through $F_1$")
        ax.set_title(title)
        return _save(fig, path)
