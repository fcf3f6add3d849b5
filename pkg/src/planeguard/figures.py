"""Figure rendering for report and trade-off CSV rows.

Uses the object-oriented matplotlib API directly (no pyplot, no global
backend state) so rendering works in headless batch runs. Each function
takes the already-parsed CSV rows and writes a PNG next to the data.
"""

from __future__ import annotations

from matplotlib.figure import Figure

from .errors import InvalidInputError

_TASK_STYLE = {
    "forensics_raw": dict(color="#b53c3c", marker="o", label="detection, encrypted planes kept"),
    "forensics_zeroed": dict(color="#2f6fb5", marker="s", label="detection, encrypted planes zeroed"),
    "recognizability": dict(color="#3c8a4e", marker="^", label="recognizability"),
}


def _new_axes(ylabel):
    fig = Figure(figsize=(6.0, 4.0), dpi=150)
    ax = fig.subplots()
    ax.set_xlabel("encrypted bitplanes s")
    ax.set_ylabel(ylabel)
    ax.set_xticks(range(9))
    ax.set_ylim(0.0, 1.05)
    ax.grid(True, alpha=0.3)
    return fig, ax


def render_report_figure(rows, out_path) -> None:
    """Accuracy vs s, one line per task, from report CSV string rows."""
    if not rows:
        raise InvalidInputError("no report rows to plot")
    series = {}
    for row in rows:
        series.setdefault(row["task"], {})[int(row["s"])] = float(row["accuracy"])
    fig, ax = _new_axes("accuracy")
    for task in sorted(series):
        pts = sorted(series[task].items())
        style = _TASK_STYLE.get(task, dict(marker="o", label=task))
        ax.plot([p[0] for p in pts], [p[1] for p in pts], markersize=4, **style)
    ax.axhline(0.5, color="gray", linestyle="--", linewidth=0.8, alpha=0.6)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path)


def render_tradeoff_figure(rows, out_path) -> None:
    """Detection accuracy and privacy index vs s from trade-off rows."""
    if not rows:
        raise InvalidInputError("no trade-off rows to plot")
    fore = [(int(r["s"]), float(r["forensics_accuracy"])) for r in rows if r["forensics_accuracy"]]
    priv = [(int(r["s"]), float(r["privacy_index"])) for r in rows if r["privacy_index"]]
    fig, ax = _new_axes("value")
    if fore:
        ax.plot([p[0] for p in fore], [p[1] for p in fore], color="#2f6fb5",
                marker="s", markersize=4, label="detection accuracy")
    if priv:
        ax.plot([p[0] for p in priv], [p[1] for p in priv], color="#8a5fbf",
                marker="D", markersize=4, label="privacy index")
    ax.axhline(0.5, color="gray", linestyle="--", linewidth=0.8, alpha=0.6)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path)
