"""Figures for exploration and obligation reports."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STATUS_COLOURS = {"holds": "tab:green", "violated": "tab:red", "uncovered": "tab:gray"}


def plot_levels(levels, path, title="states first reached per BFS depth"):
    fig, ax = plt.subplots(figsize=(7, 3.5))
    ax.bar(range(len(levels)), levels, color="tab:blue")
    ax.set_xlabel("depth")
    ax.set_ylabel("new states")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_obligations(rows, path, title="transitions checked per control term"):
    """``rows`` are (name, instances, status) triples."""
    fig, ax = plt.subplots(figsize=(7, 0.35 * len(rows) + 1.2))
    names = [r[0] for r in rows]
    ax.barh(range(len(rows)), [max(r[1], 0) for r in rows],
            color=[STATUS_COLOURS.get(r[2], "tab:blue") for r in rows])
    ax.set_yticks(range(len(rows)), names, fontsize=8)
    ax.invert_yaxis()
    ax.set_xlabel("explored instances")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path
