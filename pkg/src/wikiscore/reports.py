"""Audit report output: delimited histogram tables and rendered figures.

The table is the canonical, plottable artifact; the figure is a convenience
rendering of the same 50 bins written next to it.
"""
from __future__ import annotations

from .engine import AuditSummary


def write_histogram_table(summary: AuditSummary, stream, delimiter: str = "\t") -> None:
    """50-bin probability histogram plus summary stats, machine-readable."""
    stream.write(f"# target_label{delimiter}{summary.target_label}\n")
    stream.write(f"# scored{delimiter}{summary.scored}\n")
    error_total = sum(summary.errors.values())
    stream.write(f"# errors{delimiter}{error_total}\n")
    for error_type in sorted(summary.errors):
        stream.write(f"# errors.{error_type}{delimiter}{summary.errors[error_type]}\n")
    mean = "" if summary.mean is None else repr(summary.mean)
    median = "" if summary.median is None else repr(summary.median)
    stream.write(f"# mean{delimiter}{mean}\n")
    stream.write(f"# median{delimiter}{median}\n")
    stream.write(delimiter.join(("bin_low", "bin_high", "count")) + "\n")
    for low, high, count in summary.bins:
        stream.write(f"{low:.2f}{delimiter}{high:.2f}{delimiter}{count}\n")


def parse_histogram_table(text: str, delimiter: str = "\t") -> dict:
    """Read a table written by write_histogram_table back into a dict."""
    stats: dict = {"bins": []}
    for line in text.splitlines():
        if not line.strip():
            continue
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition(delimiter)
            stats[key] = value
            continue
        parts = line.split(delimiter)
        if parts[0] == "bin_low":
            continue
        stats["bins"].append((float(parts[0]), float(parts[1]), int(parts[2])))
    for key in ("mean", "median"):
        stats[key] = float(stats[key]) if stats.get(key) else None
    for key in ("scored", "errors"):
        if key in stats:
            stats[key] = int(stats[key])
    return stats


def render_histogram_figure(summaries: dict, path, title: str | None = None) -> None:
    """Render one or more audit histograms as densities and save to a file.

    ``summaries`` maps a legend label to an AuditSummary; overlaying the
    natural and injected runs in one figure is the typical use.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for name, summary in summaries.items():
        centers = [(low + high) / 2 for low, high, _ in summary.bins]
        total = max(summary.scored, 1)
        width = 1.0 / len(summary.bins)
        density = [count / (total * width) for _, _, count in summary.bins]
        ax.plot(centers, density, drawstyle="steps-mid", label=str(name))
        ax.fill_between(centers, density, step="mid", alpha=0.25)
    ax.set_xlabel("probability of target class")
    ax.set_ylabel("density")
    ax.set_xlim(0.0, 1.0)
    if title:
        ax.set_title(title)
    if len(summaries) > 1:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
