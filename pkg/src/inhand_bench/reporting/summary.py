"""Aggregation of scored trials into summary rows and report documents."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from .. import __version__
from ..protocol import GraspSet, TrialScore
from .stats import QUANTILE_METHOD, BoxStats, box_stats

CM = 100.0

# (summary column, trial attribute, scale to display units)
METRICS = (
    ("err_pos_cm", "err_pos", CM),
    ("err_pos_pct", "err_pos_pct", 1.0),
    ("err_or_pct", "err_or_pct", 1.0),
    ("g_euc_cm", "g_euc", CM),
    ("g_geo_cm", "g_geo", CM),
    ("g_min_cm", "g_min", CM),
)
TIMINGS = (
    ("offline_s", "offline_time"),
    ("plan_s", "planning_time"),
    ("exec_s", "execution_time"),
)
CSV_COLUMNS = (
    "label", "drops_pct", "err_pos_cm", "err_pos_pct", "err_or_pct",
    "g_euc_cm", "g_geo_cm", "g_min_cm", "offline_s", "plan_s", "exec_s",
)
#: Columns where the lowest value is the best; G_min is a resolution, not an error.
BOLD_COLUMNS = ("drops_pct", "err_pos_cm", "err_pos_pct", "err_or_pct", "g_euc_cm", "g_geo_cm")

GROUP_KEYS = {
    "method": lambda s: s.label,
    "object": lambda s: s.object_name,
    "task": lambda s: s.task_id,
}


@dataclass
class SummaryRow:
    label: str
    drops_pct: Optional[float] = None
    err_pos_cm: Optional[float] = None
    err_pos_pct: Optional[float] = None
    err_or_pct: Optional[float] = None
    g_euc_cm: Optional[float] = None
    g_geo_cm: Optional[float] = None
    g_min_cm: Optional[float] = None
    offline_s: Optional[float] = None
    plan_s: Optional[float] = None
    exec_s: Optional[float] = None
    n_attempted: int = 0
    n_success: int = 0
    n_dropped: int = 0
    n_failed: int = 0
    n_discarded: int = 0
    n_errors: int = 0
    bold: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _flatten(items) -> list:
    rows = []
    for item in items:
        if isinstance(item, GraspSet):
            if item.scores is None:
                raise ValueError(f"grasp set {item.task_id!r} has not been scored")
            rows.extend(item.scores)
        elif isinstance(item, TrialScore):
            rows.append(item)
        else:
            raise TypeError(f"cannot summarize {type(item).__name__}")
    return rows


def group_scores(scores: Iterable[TrialScore], group_by: str = "method") -> dict:
    try:
        key = GROUP_KEYS[group_by]
    except KeyError:
        raise ValueError(f"group_by must be one of {sorted(GROUP_KEYS)}") from None
    groups: dict = {}
    for s in scores:
        groups.setdefault(key(s), []).append(s)
    return {k: groups[k] for k in sorted(groups)}


def group_box_stats(rows: list) -> dict:
    """BoxStats per display metric over the successful, scored trials of a group."""
    ok = [r for r in rows if r.is_scored_success]
    stats = {}
    for column, attr, scale in METRICS + tuple((c, a, 1.0) for c, a in TIMINGS):
        values = [getattr(r, attr) * scale for r in ok if getattr(r, attr) is not None]
        if values:
            stats[column] = box_stats(values)
    return stats


def mark_best(rows: list) -> None:
    """Flag the lowest value of every error/drop column (ties all flagged)."""
    for row in rows:
        row.bold = []
    for column in BOLD_COLUMNS:
        values = [getattr(r, column) for r in rows if getattr(r, column) is not None]
        if not values:
            continue
        best = min(values)
        for r in rows:
            if getattr(r, column) == best:
                r.bold.append(column)


def summarize(items, group_by: str = "method"):
    """One summary row per group plus the BoxStats behind its medians.

    ``items`` are scored grasp sets or trial rows. Medians use successful
    trials only; drops% is relative to attempted trials (those whose setup
    was not discarded). Returns ``(rows, stats)`` with ``stats[label][column]``.
    """
    rows, all_stats = [], {}
    for label, members in group_scores(_flatten(items), group_by).items():
        attempted = [m for m in members if not m.discarded]
        dropped = sum(m.outcome == "DROPPED" for m in attempted)
        stats = group_box_stats(members)
        row = SummaryRow(
            label=label,
            drops_pct=100.0 * dropped / len(attempted) if attempted else None,
            n_attempted=len(attempted),
            n_success=sum(m.is_scored_success for m in members),
            n_dropped=dropped,
            n_failed=sum(m.outcome == "FAILED_OTHER" for m in attempted),
            n_discarded=len(members) - len(attempted),
            n_errors=sum(m.error is not None for m in members),
        )
        for column, st in stats.items():
            setattr(row, column, st.median)
        rows.append(row)
        all_stats[label] = stats
    mark_best(rows)
    return rows, all_stats


def check_contact_consistency(rows) -> list:
    """Rows (summary rows, trial rows or dicts) where G_geo < G_euc.

    A surface path can never be shorter than the straight line, so any hit
    indicates corrupted or mislabeled data.
    """
    bad = []
    for row in rows:
        get = row.get if isinstance(row, dict) else (lambda k, r=row: getattr(r, k, None))
        euc = get("g_euc_cm") if get("g_euc_cm") is not None else get("g_euc")
        geo = get("g_geo_cm") if get("g_geo_cm") is not None else get("g_geo")
        if euc is not None and geo is not None and geo < euc:
            bad.append(row)
    return bad


@dataclass
class MetricsReport:
    trials: list
    rows: list
    stats: dict
    metadata: dict

    def to_json(self) -> dict:
        return {
            "metadata": self.metadata,
            "summary": [r.as_dict() for r in self.rows],
            "box_stats": {
                label: {col: st.as_dict() for col, st in cols.items()}
                for label, cols in self.stats.items()
            },
            "trials": [trial_row_dict(t) for t in self.trials],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "MetricsReport":
        rows = []
        for d in doc["summary"]:
            rows.append(SummaryRow(**d))
        stats = {
            label: {col: BoxStats.from_dict(st) for col, st in cols.items()}
            for label, cols in doc["box_stats"].items()
        }
        trials = [TrialScore(**t) for t in doc.get("trials", [])]
        return cls(trials=trials, rows=rows, stats=stats, metadata=doc["metadata"])


def trial_row_dict(t: TrialScore) -> dict:
    return {k: getattr(t, k) for k in t.__dataclass_fields__}


def report_metadata(
    contact_tolerance: float,
    geodesic_method: str,
    group_by: str,
    extra: Optional[dict] = None,
) -> dict:
    meta = {
        "toolkit": "inhand_bench",
        "toolkit_version": __version__,
        "schema_version": 1,
        "quantile_method": QUANTILE_METHOD,
        "whisker_reach_iqr": 1.5,
        "contact_tolerance_m": contact_tolerance,
        "geodesic_method": geodesic_method,
        "group_by": group_by,
        "length_unit": "cm",
        "quaternion_convention": "wxyz",
        "setup_position_denominator": "|s_d - s_i|",
        "medians_exclude": "dropped, failed, discarded and unscorable trials",
    }
    if extra:
        meta.update(extra)
    return meta


def build_report(scores, contact_tolerance, geodesic_method, group_by="method", extra=None) -> MetricsReport:
    scores = _flatten(scores)
    rows, stats = summarize(scores, group_by)
    excluded = sum(not s.is_scored_success for s in scores)
    meta = report_metadata(
        contact_tolerance,
        getattr(geodesic_method, "value", geodesic_method),
        group_by,
        {"trials_total": len(scores), "trials_excluded_from_medians": excluded, **(extra or {})},
    )
    return MetricsReport(trials=scores, rows=rows, stats=stats, metadata=meta)


# --- plain-text tables -----------------------------------------------------


def _fmt(value, digits):
    if value is None:
        return "-"
    return f"{value:.{digits}f}"


def format_summary_table(rows) -> str:
    """Method comparison table; the best value per column is starred."""
    cols = [
        ("drops%", "drops_pct", 0),
        ("err_pos (cm)", "err_pos_cm", 2),
        ("err_pos%", "err_pos_pct", 2),
        ("err_or%", "err_or_pct", 2),
        ("G_euc (cm)", "g_euc_cm", 3),
        ("G_geo (cm)", "g_geo_cm", 3),
        ("G_min (cm)", "g_min_cm", 3),
        ("plan (s)", "plan_s", 3),
        ("exec (s)", "exec_s", 3),
    ]
    cols = [c for c in cols if any(getattr(r, c[1]) is not None for r in rows)]
    header = ["label"] + [c[0] for c in cols]
    body = []
    for r in rows:
        line = [r.label]
        for _, attr, digits in cols:
            text = _fmt(getattr(r, attr), digits)
            if attr in r.bold:
                text = "*" + text
            line.append(text)
        body.append(line)
    widths = [max(len(x[i]) for x in [header] + body) for i in range(len(header))]
    out = ["  ".join(h.ljust(w) if i == 0 else h.rjust(w) for i, (h, w) in enumerate(zip(header, widths)))]
    out.append("-" * len(out[0]))
    for line in body:
        out.append("  ".join(x.ljust(w) if i == 0 else x.rjust(w) for i, (x, w) in enumerate(zip(line, widths))))
    return "\n".join(out)


def format_metric_table(rows) -> str:
    """Per-task table with metrics as rows and tasks as columns."""
    spec = [
        ("err_pos (cm)", "err_pos_cm", "{:.3f}"),
        ("err_pos%", "err_pos_pct", "{:.1f}"),
        ("err_or%", "err_or_pct", "{:.3f}"),
        ("G_euc (cm)", "g_euc_cm", "{:.3f}"),
        ("G_geo (cm)", "g_geo_cm", "{:.3f}"),
        ("G_min (cm)", "g_min_cm", "{:.3f}"),
        ("offline time (s)", "offline_s", "{:.3f}"),
        ("plan time (s)", "plan_s", "{:.3g}"),
    ]
    header = ["metric"] + [r.label for r in rows]
    body = []
    for name, attr, fmt in spec:
        values = [getattr(r, attr) for r in rows]
        if all(v is None for v in values):
            continue
        body.append([name] + ["-" if v is None else fmt.format(v) for v in values])
    widths = [max(len(x[i]) for x in [header] + body) for i in range(len(header))]
    lines = ["  ".join(x.ljust(w) if i == 0 else x.rjust(w) for i, (x, w) in enumerate(zip(line, widths)))
             for line in [header] + body]
    lines.insert(1, "-" * len(lines[0]))
    return "\n".join(lines)
