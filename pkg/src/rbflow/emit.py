"""Time-series and summary emission: CSV, JSON, and plot outputs.

The CSV column set is fixed; absent quantities stay as empty cells and
numbers carry 17 significant digits so reruns of the same build diff
clean. The plot format writes a gnuplot script referencing the CSV and
renders the same columns to a PNG alongside it.
"""

from __future__ import annotations

import json
from dataclasses import asdict, is_dataclass
from pathlib import Path

from .monitor import CSV_COLUMNS, MonitorRecord

CSV_HEADER = ",".join(CSV_COLUMNS)


def _cell(value) -> str:
    if value is None:
        return ""
    return f"{value:.17g}"


def write_csv(records: list[MonitorRecord], path: Path) -> Path:
    if not records:
        raise ValueError("no records to emit")
    lines = [CSV_HEADER]
    for rec in records:
        lines.append(",".join(_cell(getattr(rec, col)) for col in CSV_COLUMNS))
    path.write_text("\n".join(lines) + "\n")
    return path


def write_json(summary, path: Path) -> Path:
    payload = asdict(summary) if is_dataclass(summary) else summary
    path.write_text(json.dumps(payload, indent=2, sort_keys=False) + "\n")
    return path


def write_plot_script(csv_name: str, path: Path) -> Path:
    """Gnuplot-dialect script plotting columns 2-4 against column 1."""
    lines = [
        "# generated plot script; run: gnuplot -persist " + path.name,
        "set datafile separator ','",
        "set datafile missing ''",
        "set key autotitle columnhead",
        "set xlabel 't'",
        f"plot '{csv_name}' using 1:2 with lines, \\",
        f"     '{csv_name}' using 1:3 with lines, \\",
        f"     '{csv_name}' using 1:4 with lines",
    ]
    path.write_text("\n".join(lines) + "\n")
    return path


def render_figure(records: list[MonitorRecord], path: Path) -> Path:
    """Render lambda0 / lambda1 / Q against t to an image file."""
    import matplotlib

    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    ts = [rec.t for rec in records]
    for col, style in (("lambda0", "-"), ("lambda1", "--"), ("Q", ":")):
        values = [getattr(rec, col) for rec in records]
        pts = [(t, v) for t, v in zip(ts, values) if v is not None]
        if pts:
            ax.plot([p[0] for p in pts], [p[1] for p in pts], style, label=col)
    ax.set_xlabel("t")
    ax.grid(True, alpha=0.3)
    if ax.get_legend_handles_labels()[0]:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def emit_series(records: list[MonitorRecord], fmt: str, out_dir: Path, summary=None) -> list[Path]:
    """Write one output format into a directory; returns the files written."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        return [write_csv(records, out_dir / "series.csv")]
    if fmt == "json":
        if summary is None:
            raise ValueError("json emission needs the run summary")
        return [write_json(summary, out_dir / "summary.json")]
    if fmt == "plot":
        if not records:
            raise ValueError("no records to emit")
        paths = [write_plot_script("series.csv", out_dir / "series.gp")]
        paths.append(render_figure(records, out_dir / "series.png"))
        return paths
    raise ValueError(f"unknown format {fmt!r}")
