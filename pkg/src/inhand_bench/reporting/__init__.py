from .emit import boxplot_svg, emit_report, load_report_json, read_summary_csv, summary_csv
from .stats import QUANTILE_METHOD, BoxStats, box_stats, quantile
from .summary import (
    CSV_COLUMNS,
    MetricsReport,
    SummaryRow,
    build_report,
    check_contact_consistency,
    format_metric_table,
    format_summary_table,
    summarize,
)

__all__ = [
    "CSV_COLUMNS",
    "QUANTILE_METHOD",
    "BoxStats",
    "MetricsReport",
    "SummaryRow",
    "box_stats",
    "boxplot_svg",
    "build_report",
    "check_contact_consistency",
    "emit_report",
    "format_metric_table",
    "format_summary_table",
    "load_report_json",
    "quantile",
    "read_summary_csv",
    "summarize",
    "summary_csv",
]
