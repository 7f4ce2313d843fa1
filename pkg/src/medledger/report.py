"""Figure rendering for benchmark and simulation output.

Renders PNGs next to the delimited output so a run leaves both the raw
numbers and something a human can read at a glance. Uses the Agg backend
only; nothing here opens a window.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

from matplotlib.figure import Figure  # noqa: E402  (backend must be pinned first)

from .bench import BenchResult
from .sim import (  # noqa: E402
    EVENT_MINED,
    EVENT_RECEIVED,
    EVENT_REJECTED,
    EVENT_REORGED,
    EVENT_TX_SUBMITTED,
    SimEvent,
)

_EVENT_STYLE = {
    EVENT_TX_SUBMITTED: ("tab:gray", "."),
    EVENT_MINED: ("tab:green", "*"),
    EVENT_RECEIVED: ("tab:blue", "o"),
    EVENT_REJECTED: ("tab:red", "x"),
    EVENT_REORGED: ("tab:orange", "s"),
}


def _size_label(size_bytes: int) -> str:
    if size_bytes >= 1 << 20 and size_bytes % (1 << 20) == 0:
        return f"{size_bytes >> 20} MB"
    if size_bytes >= 1 << 10 and size_bytes % (1 << 10) == 0:
        return f"{size_bytes >> 10} KB"
    return f"{size_bytes} B"


def bench_figure(result: BenchResult, path: str | Path) -> Path:
    """Grouped bars of median upload vs download latency per payload size."""
    sizes = sorted({row.size_bytes for row in result.rows})
    uploads = [result.median(size, "upload") for size in sizes]
    downloads = [result.median(size, "download") for size in sizes]
    fig = Figure(figsize=(7, 4.5))
    ax = fig.add_subplot(111)
    positions = range(len(sizes))
    width = 0.38
    ax.bar(
        [p - width / 2 for p in positions], uploads, width,
        label="upload (seal+store+anchor+mine)", color="tab:blue",
    )
    ax.bar(
        [p + width / 2 for p in positions], downloads, width,
        label="download (policy+fetch+open)", color="tab:orange",
    )
    ax.set_xticks(list(positions))
    ax.set_xticklabels([_size_label(size) for size in sizes])
    ax.set_ylabel("median latency (ms)")
    ax.set_xlabel("record payload size")
    ax.set_title("EHR upload vs download latency")
    if min(uploads + downloads) > 0:
        ax.set_yscale("log")
    ax.legend()
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    out = Path(path)
    fig.savefig(out, dpi=120)
    return out


def sim_timeline_figure(events: list[SimEvent], n_nodes: int, path: str | Path) -> Path:
    """Event timeline: one lane per node, one marker per event."""
    fig = Figure(figsize=(8, 1.2 + 0.8 * max(n_nodes, 2)))
    ax = fig.add_subplot(111)
    for kind, (color, marker) in _EVENT_STYLE.items():
        xs = [event.tick for event in events if event.kind == kind]
        ys = [event.node_id for event in events if event.kind == kind]
        if xs:
            ax.scatter(xs, ys, c=color, marker=marker, label=kind, s=48, alpha=0.85)
    ax.set_yticks(range(n_nodes))
    ax.set_yticklabels([f"node {i}" for i in range(n_nodes)])
    ax.set_xlabel("tick")
    ax.set_title("simulation event timeline")
    ax.grid(axis="x", alpha=0.3)
    ax.legend(loc="upper center", bbox_to_anchor=(0.5, -0.25), ncol=3, frameon=False)
    fig.tight_layout()
    out = Path(path)
    fig.savefig(out, dpi=120)
    return out
