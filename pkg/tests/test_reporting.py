import json
import random
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from inhand_bench.errors import EmptySample, ReportIoError
from inhand_bench.protocol import TrialScore
from inhand_bench.reporting import (
    BoxStats,
    boxplot_svg,
    box_stats,
    build_report,
    check_contact_consistency,
    emit_report,
    load_report_json,
    read_summary_csv,
    summarize,
    summary_csv,
)
from inhand_bench.reporting.summary import CSV_COLUMNS, format_metric_table, format_summary_table

samples = st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=60)


def score(label, idx, outcome="SUCCESS", err_pos=None, task="t", discarded=False, **kw):
    return TrialScore(
        task_id=task, trial_index=idx, label=label, object_name="obj", level="I",
        outcome=outcome, discarded=discarded, err_pos=err_pos, **kw,
    )


class TestBoxStats:
    def test_reference_sample(self):
        s = box_stats([1, 2, 3, 4, 100])
        assert (s.median, s.q1, s.q3, s.iqr) == (3, 2, 4, 2)
        assert (s.whisker_low, s.whisker_high) == (1, 4)
        assert s.outliers == [100]

    def test_single_value(self):
        s = box_stats([2.5])
        assert s.median == s.q1 == s.q3 == s.whisker_low == s.whisker_high == 2.5
        assert s.outliers == []

    def test_linear_quartiles_match_numpy(self):
        rng = np.random.default_rng(5)
        for n in range(1, 30):
            x = rng.normal(size=n)
            s = box_stats(x)
            assert s.q1 == np.quantile(x, 0.25)
            assert s.median == np.quantile(x, 0.5)
            assert s.q3 == np.quantile(x, 0.75)

    def test_empty_and_nan(self):
        with pytest.raises(EmptySample):
            box_stats([])
        with pytest.raises(EmptySample):
            box_stats([1.0, float("nan")])

    def test_dict_round_trip(self):
        s = box_stats([3, 1, 4, 1, 5, 9, 2, 6])
        assert BoxStats.from_dict(json.loads(json.dumps(s.as_dict()))) == s

    @settings(max_examples=300, deadline=None)
    @given(samples)
    def test_partition_and_order(self, x):
        s = box_stats(x)
        inliers = [v for v in x if s.whisker_low <= v <= s.whisker_high]
        assert len(inliers) + len(s.outliers) == len(x)
        assert s.q1 <= s.median <= s.q3
        assert s.whisker_low in x and s.whisker_high in x
        lo_fence, hi_fence = s.q1 - 1.5 * s.iqr, s.q3 + 1.5 * s.iqr
        assert all(v < lo_fence or v > hi_fence for v in s.outliers)
        assert all(lo_fence <= v <= hi_fence for v in inliers)

    @settings(max_examples=300, deadline=None)
    @given(samples)
    def test_median_stable_under_symmetric_extension(self, x):
        wider = list(x) + [min(x) - 1.0, max(x) + 1.0]
        assert box_stats(wider).median == box_stats(x).median

    @settings(max_examples=300, deadline=None)
    @given(samples, st.randoms())
    def test_permutation_invariant(self, x, rnd):
        y = list(x)
        rnd.shuffle(y)
        assert box_stats(x) == box_stats(y)


class TestSummary:
    def test_drops_and_medians(self):
        rows = [score("a", 1, err_pos=0.01), score("a", 2, err_pos=0.03), score("a", 3, "DROPPED"),
                score("a", 4, err_pos=0.02), score("a", 5, err_pos=5.0, discarded=True)]
        (row,), stats = summarize(rows)
        assert row.drops_pct == 25.0  # discarded trial not attempted
        assert row.err_pos_cm == pytest.approx(2.0)
        assert row.n_discarded == 1
        assert stats["a"]["err_pos_cm"].n == 3

    def test_bold_flags_and_ties(self):
        rows = [score("a", 1, err_pos=0.01), score("b", 1, err_pos=0.01), score("c", 1, err_pos=0.02)]
        out, _ = summarize(rows)
        flagged = [r.label for r in out if "err_pos_cm" in r.bold]
        assert flagged == ["a", "b"]
        assert all("g_min_cm" not in r.bold for r in out)

    def test_group_by(self):
        rows = [score("m1", 1, err_pos=0.01, task="x"), score("m2", 1, err_pos=0.02, task="x")]
        assert [r.label for r in summarize(rows, "task")[0]] == ["x"]
        assert [r.label for r in summarize(rows, "method")[0]] == ["m1", "m2"]
        with pytest.raises(ValueError):
            summarize(rows, "colour")

    def test_contact_consistency(self):
        good = score("a", 1, g_euc=0.01, g_geo=0.02)
        bad = score("a", 2, g_euc=0.02, g_geo=0.01)
        assert check_contact_consistency([good, bad]) == [bad]
        assert check_contact_consistency([{"g_euc_cm": 1.0, "g_geo_cm": 0.5}]) != []

    def test_tables_render(self):
        rows, _ = summarize([score("a", 1, err_pos=0.0123, err_pos_pct=12.0, err_or_pct=3.0)])
        text = format_summary_table(rows)
        assert "*1.23" in text
        assert "G_euc" not in text  # empty columns dropped
        assert "err_pos (cm)" in format_metric_table(rows)


def make_report(n=7):
    rng = random.Random(1)
    rows = [score(m, k, err_pos=rng.uniform(0.001, 0.03), err_pos_pct=rng.uniform(1, 40), err_or_pct=rng.uniform(0, 20))
            for m in ("alpha", "beta") for k in range(1, n + 1)]
    rows.append(score("beta", n + 1, err_pos=0.5, err_pos_pct=90.0, err_or_pct=1.0))
    return build_report(rows, 0.002, "EDGE_DIJKSTRA", "method")


class TestEmit:
    def test_csv_round_trip(self):
        rep = make_report()
        text = summary_csv(rep.rows)
        assert text.splitlines()[0] == ",".join(CSV_COLUMNS)
        back = read_summary_csv(text)
        for a, b in zip(back, rep.rows):
            for c in CSV_COLUMNS:
                assert getattr(a, c) == getattr(b, c)

    def test_json_round_trip(self, tmp_path):
        rep = make_report()
        emit_report(rep, tmp_path, ["json"])
        back = load_report_json(tmp_path / "report.json")
        assert back.rows == rep.rows
        assert back.stats == rep.stats
        assert back.trials == rep.trials
        assert back.metadata["quantile_method"] == "linear"

    def test_svg_geometry_inverts_to_stats(self):
        rep = make_report()
        svg = boxplot_svg("t", {k: v["err_pos_cm"] for k, v in rep.stats.items()})
        root = ET.fromstring(svg)
        ns = "{http://www.w3.org/2000/svg}"
        y_min, y_max = float(root.get("data-y-min")), float(root.get("data-y-max"))
        top, bottom = float(root.get("data-plot-top")), float(root.get("data-plot-bottom"))

        def value(y):
            return y_min + (bottom - float(y)) / (bottom - top) * (y_max - y_min)

        for g in root.iter(f"{ns}g"):
            st_ = rep.stats[g.get("data-group")]["err_pos_cm"]
            med = g.find(f"{ns}line[@class='median']")
            assert value(med.get("y1")) == pytest.approx(st_.median, abs=1e-3 * (y_max - y_min))
            box = g.find(f"{ns}rect[@class='box']")
            q3 = value(box.get("y"))
            q1 = value(float(box.get("y")) + float(box.get("height")))
            assert q3 == pytest.approx(st_.q3, abs=1e-3 * (y_max - y_min))
            assert q1 == pytest.approx(st_.q1, abs=1e-3 * (y_max - y_min))
            outs = [value(c.get("cy")) for c in g.findall(f"{ns}circle[@class='outlier']")]
            assert outs == pytest.approx(st_.outliers, abs=1e-3 * (y_max - y_min))

    def test_emit_all(self, tmp_path):
        written = emit_report(make_report(), tmp_path)
        names = sorted(p.name for p in written)
        assert "summary.csv" in names and "report.json" in names and "trials.csv" in names
        assert "boxplot_err_pos_cm.svg" in names
        assert "boxplot_g_euc_cm.svg" not in names

    def test_empty_rows_write_nothing(self, tmp_path):
        rep = build_report([], 0.002, "EDGE_DIJKSTRA")
        with pytest.raises(ReportIoError):
            emit_report(rep, tmp_path / "out")
        assert not (tmp_path / "out").exists()

    def test_unwritable(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        with pytest.raises(ReportIoError):
            emit_report(make_report(), blocker / "sub")

    def test_deterministic(self, tmp_path):
        emit_report(make_report(), tmp_path / "a")
        emit_report(make_report(), tmp_path / "b")
        for p in sorted((tmp_path / "a").iterdir()):
            assert p.read_bytes() == (tmp_path / "b" / p.name).read_bytes()
