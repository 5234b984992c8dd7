"""Report writers: CSV summary tables, a JSON document and SVG box plots.

Output is deterministic: identical inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from xml.sax.saxutils import escape, quoteattr

from ..errors import ReportIoError
from ..protocol import TrialScore
from .summary import CSV_COLUMNS, METRICS, MetricsReport, SummaryRow, trial_row_dict

FORMATS = ("csv", "json", "svg")

METRIC_TITLES = {
    "err_pos_cm": "Position error (cm)",
    "err_pos_pct": "Position error (%)",
    "err_or_pct": "Orientation error (%)",
    "g_euc_cm": "Euclidean contact error (cm)",
    "g_geo_cm": "Geodesic contact error (cm)",
    "g_min_cm": "Mesh resolution G_min (cm)",
}


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def summary_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in rows:
        writer.writerow([_cell(getattr(r, c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def read_summary_csv(text: str) -> list:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
        raise ValueError(f"unexpected CSV header {reader.fieldnames}")
    rows = []
    for rec in reader:
        kwargs = {"label": rec["label"]}
        for c in CSV_COLUMNS[1:]:
            kwargs[c] = float(rec[c]) if rec[c] != "" else None
        rows.append(SummaryRow(**kwargs))
    return rows


TRIAL_COLUMNS = tuple(TrialScore.__dataclass_fields__)


def trials_csv(trials) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRIAL_COLUMNS)
    for t in trials:
        d = trial_row_dict(t)
        writer.writerow([_cell(d[c]) for c in TRIAL_COLUMNS])
    return buf.getvalue()


def report_json(report: MetricsReport) -> str:
    return json.dumps(report.to_json(), indent=2, sort_keys=True, allow_nan=False) + "\n"


# --- SVG -------------------------------------------------------------------

WIDTH, HEIGHT = 640, 400
LEFT, RIGHT, TOP, BOTTOM = 70, 20, 40, 60
PAD_FRACTION = 0.05


def _c(x: float) -> str:
    return f"{x:.4f}"


def axis_range(stats_list) -> tuple:
    """Value range covered by the plot: data extent padded by 5 % each side."""
    lo = min(min([s.whisker_low] + list(s.outliers)) for s in stats_list)
    hi = max(max([s.whisker_high] + list(s.outliers)) for s in stats_list)
    span = hi - lo
    if span == 0:
        span = abs(hi) if hi != 0 else 1.0
    return lo - PAD_FRACTION * span, hi + PAD_FRACTION * span


def boxplot_svg(title: str, groups: dict) -> str:
    """Box plot of precomputed BoxStats, one box per group.

    Values map to pixels by ``y = bottom - (v - y_min) / (y_max - y_min) *
    (bottom - top)``; the four constants are stored on the root element.
    """
    labels = list(groups)
    y_min, y_max = axis_range(list(groups.values()))
    top, bottom = TOP, HEIGHT - BOTTOM
    plot_w = WIDTH - LEFT - RIGHT

    def y(v):
        return bottom - (v - y_min) / (y_max - y_min) * (bottom - top)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" data-y-min="{y_min!r}" data-y-max="{y_max!r}" '
        f'data-plot-top="{top}" data-plot-bottom="{bottom}">',
        f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-family="sans-serif" '
        f'font-size="14">{escape(title)}</text>',
        f'<line class="axis" x1="{LEFT}" y1="{top}" x2="{LEFT}" y2="{bottom}" stroke="black"/>',
        f'<line class="axis" x1="{LEFT}" y1="{bottom}" x2="{WIDTH - RIGHT}" y2="{bottom}" stroke="black"/>',
    ]
    for k in range(6):
        v = y_min + (y_max - y_min) * k / 5
        out.append(
            f'<text class="tick" x="{LEFT - 6}" y="{_c(y(v) + 4)}" text-anchor="end" '
            f'font-family="sans-serif" font-size="10">{v:.3g}</text>'
        )
    slot = plot_w / max(len(labels), 1)
    half = min(slot * 0.3, 40)
    for i, label in enumerate(labels):
        s = groups[label]
        cx = LEFT + slot * (i + 0.5)
        g = quoteattr(str(label))
        out.append(f"<g class=\"group\" data-group={g}>")
        out.append(
            f'<line class="whisker" x1="{_c(cx)}" y1="{_c(y(s.whisker_low))}" x2="{_c(cx)}" '
            f'y2="{_c(y(s.q1))}" stroke="black"/>'
        )
        out.append(
            f'<line class="whisker" x1="{_c(cx)}" y1="{_c(y(s.q3))}" x2="{_c(cx)}" '
            f'y2="{_c(y(s.whisker_high))}" stroke="black"/>'
        )
        for w in (s.whisker_low, s.whisker_high):
            out.append(
                f'<line class="cap" x1="{_c(cx - half / 2)}" y1="{_c(y(w))}" '
                f'x2="{_c(cx + half / 2)}" y2="{_c(y(w))}" stroke="black"/>'
            )
        out.append(
            f'<rect class="box" x="{_c(cx - half)}" y="{_c(y(s.q3))}" width="{_c(2 * half)}" '
            f'height="{_c(y(s.q1) - y(s.q3))}" fill="#9ecae1" stroke="black"/>'
        )
        out.append(
            f'<line class="median" x1="{_c(cx - half)}" y1="{_c(y(s.median))}" '
            f'x2="{_c(cx + half)}" y2="{_c(y(s.median))}" stroke="#d62728" stroke-width="2"/>'
        )
        for o in s.outliers:
            out.append(f'<circle class="outlier" cx="{_c(cx)}" cy="{_c(y(o))}" r="3" fill="none" stroke="black"/>')
        out.append(
            f'<text class="label" x="{_c(cx)}" y="{bottom + 18}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{escape(str(label))}</text>'
        )
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_report(report: MetricsReport, out_dir, formats=FORMATS) -> list:
    """Write the report files and return their paths.

    csv: ``summary.csv`` and ``trials.csv``; json: ``report.json``;
    svg: ``boxplot_<metric>.svg`` for every metric with data.
    """
    if not report.rows:
        raise ReportIoError("report has no rows; nothing written")
    formats = [f.lower() for f in formats]
    unknown = set(formats) - set(FORMATS)
    if unknown:
        raise ReportIoError(f"unknown report format(s): {', '.join(sorted(unknown))}")

    files = {}
    if "csv" in formats:
        files["summary.csv"] = summary_csv(report.rows)
        files["trials.csv"] = trials_csv(report.trials)
    if "json" in formats:
        files["report.json"] = report_json(report)
    if "svg" in formats:
        for column, _, _ in METRICS:
            groups = {label: cols[column] for label, cols in report.stats.items() if column in cols}
            if groups:
                files[f"boxplot_{column}.svg"] = boxplot_svg(METRIC_TITLES[column], groups)

    out_dir = Path(out_dir)
    written = []
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for name, text in files.items():
            path = out_dir / name
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            written.append(path)
    except OSError as exc:
        raise ReportIoError(f"cannot write report to {out_dir}: {exc}") from exc
    return written


def load_report_json(path) -> MetricsReport:
    with open(path, "r", encoding="utf-8") as fh:
        return MetricsReport.from_json(json.load(fh))
