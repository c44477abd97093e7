"""Figure rendering for the report path.

Writes the two corpus figures next to the delimited output: per-project
Lorenz curves of the variable-code workload and a Gini bar chart.
Rendering is headless and byte-deterministic (fixed size, dpi and PNG
metadata).
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

_SAVE_KWARGS = {"dpi": 150, "metadata": {"Software": "varmine"}}


def save_lorenz_figure(reports, out_path) -> Path | None:
    """One Lorenz polygon per project against the equality diagonal."""
    curves = [
        (r.name, r.concentration.lorenz_points)
        for r in reports
        if r.status == "ok" and r.concentration is not None
    ]
    if not curves:
        return None
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    ax.plot([0, 1], [0, 1], color="black", linewidth=1.0, label="equality")
    for name, points in curves:
        xs = [p[0] for p in points]
        ys = [p[1] for p in points]
        ax.plot(xs, ys, marker="o", markersize=2.5, linewidth=1.2, label=name)
    ax.set_xlabel("cumulative share of developers")
    ax.set_ylabel("cumulative share of variable-code changes")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, **_SAVE_KWARGS)
    plt.close(fig)
    return out_path


def save_gini_figure(reports, out_path) -> Path | None:
    """Gini coefficient per project."""
    rows = [
        (r.name, r.concentration.gini)
        for r in reports
        if r.status == "ok" and r.concentration is not None
    ]
    if not rows:
        return None
    names = [r[0] for r in rows]
    values = [r[1] for r in rows]
    fig, ax = plt.subplots(figsize=(6.0, 3.5))
    ax.bar(range(len(rows)), values, color="#4878a8")
    ax.set_xticks(range(len(rows)))
    ax.set_xticklabels(names, rotation=30, ha="right", fontsize=8)
    ax.set_ylim(0, 1)
    ax.set_ylabel("Gini coefficient")
    for i, v in enumerate(values):
        ax.text(i, v + 0.02, f"{v:.2f}", ha="center", fontsize=7)
    fig.tight_layout()
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, **_SAVE_KWARGS)
    plt.close(fig)
    return out_path
