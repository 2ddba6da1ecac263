"""Report rendering: aligned text tables, CSV files and bar-chart figures.

Every writer produces deterministic bytes for identical inputs so whole
output directories can be compared across pipeline invocations; figures
pin their PNG metadata for the same reason.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .eval import MetricReport, SourceStats

_PNG_METADATA = {"Software": "cordsearch"}
_FIGURE_METRICS = ("P@10", "NDCG@10", "AP")


def _write_atomic(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    tmp.replace(path)


def _align(rows: list[list[str]]) -> str:
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    lines = []
    for row in rows:
        cells = [row[0].ljust(widths[0])] + [
            cell.rjust(width) for cell, width in zip(row[1:], widths[1:])
        ]
        lines.append("  ".join(cells).rstrip())
    return "\n".join(lines) + "\n"


def _format_value(name: str, value: float) -> str:
    return f"{value:.0f}" if name.startswith("num_") else f"{value:.4f}"


def metric_table(report: MetricReport) -> str:
    names = report.metric_names()
    rows = [["topic", *names]]
    for topic in sorted(report.per_topic):
        row = report.per_topic[topic]
        rows.append([str(topic), *(_format_value(n, row[n]) for n in names)])
    if report.means:
        rows.append(["all", *(_format_value(n, report.means[n]) for n in names)])
    table = _align(rows)
    if report.unjudged_topics:
        unjudged = ", ".join(str(t) for t in report.unjudged_topics)
        table += f"unjudged topics (excluded from means): {unjudged}\n"
    return table


def metric_csv(report: MetricReport) -> str:
    names = report.metric_names()
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(["topic", *names])
    for topic in sorted(report.per_topic):
        row = report.per_topic[topic]
        writer.writerow([topic, *(_format_value(n, row[n]) for n in names)])
    if report.means:
        writer.writerow(["all", *(_format_value(n, report.means[n]) for n in names)])
    return buffer.getvalue()


def plot_metric_report(report: MetricReport, path: Path, title: str) -> None:
    """Per-topic bars for the headline metrics, mean as a dashed line."""
    topics = sorted(report.per_topic)
    metrics = [m for m in _FIGURE_METRICS if report.means and m in report.means]
    fig, axes = plt.subplots(
        len(metrics) or 1, 1, figsize=(7, 2.2 * (len(metrics) or 1)), sharex=True
    )
    if len(metrics) <= 1:
        axes = [axes]
    for ax, name in zip(axes, metrics):
        values = [report.per_topic[t][name] for t in topics]
        ax.bar([str(t) for t in topics], values, color="#4878a8")
        ax.axhline(report.means[name], color="#b04030", linestyle="--", linewidth=1)
        ax.set_ylabel(name)
        ax.set_ylim(0, 1.05)
    axes[0].set_title(title)
    axes[-1].set_xlabel("topic")
    fig.tight_layout()
    buffer = io.BytesIO()
    fig.savefig(buffer, format="png", dpi=100, metadata=_PNG_METADATA)
    plt.close(fig)
    _write_atomic(path, buffer.getvalue())


def write_metric_report(report: MetricReport, out_dir: str | Path, stem: str, title: str | None = None) -> list[Path]:
    """Render one evaluation to <stem>.txt / .csv / .png inside out_dir."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    txt = out_dir / f"{stem}.txt"
    _write_atomic(txt, metric_table(report).encode("utf-8"))
    csv_path = out_dir / f"{stem}.csv"
    _write_atomic(csv_path, metric_csv(report).encode("utf-8"))
    png = out_dir / f"{stem}.png"
    plot_metric_report(report, png, title or stem)
    return [txt, csv_path, png]


def source_table(stats: SourceStats) -> str:
    rows = [["source", "partially relevant (1)", "relevant (2)", "# documents"]]
    for row in stats.rows:
        rows.append(
            [
                row.source,
                f"{row.partial} ({row.partial_pct:.2f}%)",
                f"{row.relevant} ({row.relevant_pct:.2f}%)",
                str(row.corpus_docs),
            ]
        )
    rows.append(
        [
            "Total",
            f"{stats.total_partial} (100%)" if stats.total_partial else "0 (0%)",
            f"{stats.total_relevant} (100%)" if stats.total_relevant else "0 (0%)",
            str(stats.total_docs),
        ]
    )
    return _align(rows)


def source_csv(stats: SourceStats) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(
        ["source", "partial", "partial_pct", "relevant", "relevant_pct", "corpus_docs"]
    )
    for row in stats.rows:
        writer.writerow(
            [
                row.source,
                row.partial,
                f"{row.partial_pct:.2f}",
                row.relevant,
                f"{row.relevant_pct:.2f}",
                row.corpus_docs,
            ]
        )
    writer.writerow(
        ["Total", stats.total_partial, "100.00", stats.total_relevant, "100.00", stats.total_docs]
    )
    return buffer.getvalue()


def plot_source_stats(stats: SourceStats, path: Path, title: str) -> None:
    sources = [row.source for row in stats.rows]
    x = range(len(sources))
    width = 0.4
    fig, ax = plt.subplots(figsize=(7, 3.2))
    ax.bar([i - width / 2 for i in x], [r.partial for r in stats.rows], width,
           label="partially relevant (1)", color="#4878a8")
    ax.bar([i + width / 2 for i in x], [r.relevant for r in stats.rows], width,
           label="relevant (2)", color="#b04030")
    ax.set_xticks(list(x))
    ax.set_xticklabels(sources, rotation=30, ha="right")
    ax.set_ylabel("unique documents")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    buffer = io.BytesIO()
    fig.savefig(buffer, format="png", dpi=100, metadata=_PNG_METADATA)
    plt.close(fig)
    _write_atomic(path, buffer.getvalue())


def write_source_stats(stats: SourceStats, out_dir: str | Path, stem: str, title: str | None = None) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    txt = out_dir / f"{stem}.txt"
    _write_atomic(txt, source_table(stats).encode("utf-8"))
    csv_path = out_dir / f"{stem}.csv"
    _write_atomic(csv_path, source_csv(stats).encode("utf-8"))
    png = out_dir / f"{stem}.png"
    plot_source_stats(stats, png, title or stem)
    return [txt, csv_path, png]
