"""Acceptance suite: one test per numbered criterion.

Run ``pytest tests/test_acceptance.py`` and read the "acceptance criteria"
section at the end of the output for the PASS/FAIL line of each criterion.
"""

import math
import time

import numpy as np
import pytest

from inhand_bench.cli import main as cli_main
from inhand_bench.geometry.contact import contact_region_error
from inhand_bench.geometry.geodesic import GeodesicMethod, GeodesicSolver
from inhand_bench.meshio import save_mesh
from inhand_bench.pose import Pose, axis_angle_quaternion, orientation_error_pct, quat_multiply
from inhand_bench.protocol import (
    SetupStatus,
    load_task,
    load_trial_bundle,
    score_trial,
    validate_setup,
)
from inhand_bench.reporting import (
    box_stats,
    check_contact_consistency,
    format_summary_table,
    read_summary_csv,
    summarize,
)

from fixture_builders import DATA, TABLE3, TABLE4, build_table3, write_json
from oracles import bellman_ford, contact_error_oracle, random_fixture
from shapes import subdivided_cube, tetra, unit_cube

N_RANDOM_FIXTURES = 24


def random_unit_quaternions(rng, n):
    q = rng.normal(size=(n, 4))
    return q / np.linalg.norm(q, axis=1, keepdims=True)


@pytest.mark.criterion(1, "contact region error equals brute-force max-min oracle")
def test_c1_oracle_equivalence(record_property):
    fixtures = [random_fixture(seed) for seed in range(N_RANDOM_FIXTURES)]
    assert all(obj.vertex_count <= 500 and 1 <= len(links) <= 3 for obj, links, _, _ in fixtures)
    t0 = time.perf_counter()
    ours = [
        contact_region_error(obj, links, region, metric, tol)
        for obj, links, region, tol in fixtures
        for metric in ("EUCLIDEAN", "GEODESIC")
    ]
    elapsed = time.perf_counter() - t0
    ref = [
        contact_error_oracle(obj, links, region, metric, tol)
        for obj, links, region, tol in fixtures
        for metric in ("EUCLIDEAN", "GEODESIC")
    ]
    mismatches = [i for i, (a, b) in enumerate(zip(ours, ref)) if a != b]
    record_property("detail", f"{len(ours)} cases bitwise equal, toolkit {elapsed:.2f} s")
    assert not mismatches, f"mismatching cases {mismatches}"
    assert elapsed < 10.0


@pytest.mark.criterion(2, "edge Dijkstra equals Bellman-Ford; cube within 5%; Steiner <= edge")
def test_c2_geodesic(record_property):
    t0 = time.perf_counter()
    meshes = [random_fixture(seed)[0] for seed in range(N_RANDOM_FIXTURES)]
    meshes += [unit_cube(), subdivided_cube(4), subdivided_cube(6)]
    rng = np.random.default_rng(2)
    compared = 0
    for mesh in meshes:
        assert mesh.vertex_count <= 500
        edge = GeodesicSolver(mesh, GeodesicMethod.EDGE_DIJKSTRA)
        steiner = GeodesicSolver(mesh, GeodesicMethod.STEINER_REFINED)
        sources = sorted(set(rng.integers(0, mesh.vertex_count, size=4).tolist()) | {0})
        for src in sources:
            ref = bellman_ford(mesh, src)
            for dst in range(src, mesh.vertex_count):
                d = edge.distance(src, dst)
                assert d == ref[dst], (mesh.name, src, dst)
                assert steiner.distance(src, dst) <= d
                compared += 1
    for n in (4, 6, 8):  # even, so each face center is a vertex
        cube = subdivided_cube(n)
        a = int(np.argmin(np.linalg.norm(cube.vertices - [0.5, 0.5, 0.0], axis=1)))
        b = int(np.argmin(np.linalg.norm(cube.vertices - [0.5, 0.5, 1.0], axis=1)))
        assert cube.vertices[a].tolist() == [0.5, 0.5, 0.0] and cube.vertices[b].tolist() == [0.5, 0.5, 1.0]
        for method in GeodesicMethod:
            d = GeodesicSolver(cube, method).distance(a, b)
            assert abs(d - 2.0) / 2.0 < 0.05, (n, method, d)
    elapsed = time.perf_counter() - t0
    record_property("detail", f"{compared} pairs, {elapsed:.2f} s")
    assert elapsed < 30.0


@pytest.mark.criterion(3, "orientation error analytic values and invariances")
def test_c3_orientation(record_property):
    rng = np.random.default_rng(3)
    qs = random_unit_quaternions(rng, 1000)
    for q in qs:
        assert orientation_error_pct(q, q) == 0.0
        assert orientation_error_pct(q, -q) == 0.0
    for q in qs[:200]:
        axis = rng.normal(size=3)
        half = quat_multiply(q, axis_angle_quaternion(axis, math.pi))
        assert abs(orientation_error_pct(q, half) - 100.0) <= 1e-9
        quarter = quat_multiply(q, axis_angle_quaternion(axis, math.pi / 2))
        assert abs(orientation_error_pct(q, quarter) - 54.12) <= 0.01
    worst = 0.0
    a, b, g = (random_unit_quaternions(rng, 1000) for _ in range(3))
    for q1, q2, h in zip(a, b, g):
        base = orientation_error_pct(q1, q2)
        worst = max(
            worst,
            abs(orientation_error_pct(-q1, q2) - base),
            abs(orientation_error_pct(q1, -q2) - base),
            abs(orientation_error_pct(quat_multiply(h, q1), quat_multiply(h, q2)) - base),
        )
    record_property("detail", f"max invariance deviation {worst:.1e}")
    assert worst <= 1e-9


# (summary column, published key)
TABLE4_COLUMNS = [
    ("err_pos_cm", "err_pos"), ("err_pos_pct", "err_pos_pct"), ("err_or_pct", "err_or_pct"),
    ("g_euc_cm", "g_euc"), ("g_geo_cm", "g_geo"), ("g_min_cm", "g_min"),
    ("offline_s", "offline"), ("plan_s", "plan"),
]


@pytest.mark.criterion(4, "bundled Level III fixtures reproduce the DMG per-object table within 0.5%")
def test_c4_table4(record_property, tmp_path):
    scores = []
    for slug in TABLE4:
        task = load_task(DATA / "table4" / slug / "task.json")
        scores += [score_trial(task, t) for t in load_trial_bundle(DATA / "table4" / slug / "trials")]
    rows, _ = summarize(scores, group_by="task")
    assert sorted(r.label for r in rows) == sorted(TABLE4)
    worst = 0.0
    for row in rows:
        published = TABLE4[row.label]
        for column, key in TABLE4_COLUMNS:
            got, want = getattr(row, column), published[key]
            rel = abs(got - want) / want
            worst = max(worst, rel)
            assert rel <= 0.005, (row.label, column, got, want)
    assert check_contact_consistency(rows) == []
    assert check_contact_consistency(scores) == []
    # the same numbers come out of the CLI's CSV
    args = []
    for slug in TABLE4:
        args += [str(DATA / "table4" / slug / "task.json"), str(DATA / "table4" / slug / "trials")]
    assert cli_main(["eval", *args, "--out", str(tmp_path), "--format", "csv"]) == 0
    csv_rows = {r.label: r for r in read_summary_csv((tmp_path / "summary.csv").read_text())}
    for row in rows:
        for column, _ in TABLE4_COLUMNS:
            assert getattr(csv_rows[row.label], column) == getattr(row, column)
    record_property("detail", f"32 entries, worst relative deviation {worst:.1e}")


@pytest.mark.criterion(5, "method comparison summary: drops, 2-decimal medians, best-value flags")
def test_c5_table3(record_property, tmp_path):
    built = build_table3(tmp_path)
    scores = []
    for method, (task_path, bundle) in built.items():
        task = load_task(task_path)
        scores += [score_trial(task, t) for t in load_trial_bundle(bundle)]
    rows, _ = summarize(scores, group_by="method")
    by_label = {r.label: r for r in rows}
    assert [by_label[m].drops_pct for m in TABLE3] == [5.0, 9.0, 7.0, 0.0]
    for method, (drops, err_cm, err_pct, or_pct) in TABLE3.items():
        r = by_label[method]
        assert f"{r.err_pos_cm:.2f}" == f"{err_cm:.2f}", (method, r.err_pos_cm)
        assert f"{r.err_pos_pct:.2f}" == f"{err_pct:.2f}", (method, r.err_pos_pct)
        assert f"{r.err_or_pct:.2f}" == f"{or_pct:.2f}", (method, r.err_or_pct)
    flagged = {c: [r.label for r in rows if c in r.bold] for c in ("drops_pct", "err_pos_cm", "err_pos_pct", "err_or_pct")}
    assert flagged == {
        "drops_pct": ["relaxed-rigidity"],
        "err_pos_cm": ["relaxed-rigidity"],
        "err_pos_pct": ["relaxed-rigidity"],
        "err_or_pct": ["point-contact"],
    }
    table = format_summary_table(rows)
    assert "*1.32" in table and "*28.67" in table and "*9.74" in table
    record_property("detail", "4 methods x 100 trials")


@pytest.mark.criterion(6, "box-plot statistics on reference sample and 1000 random samples")
def test_c6_box_stats(record_property):
    s = box_stats([1, 2, 3, 4, 100])
    assert s.median == 3 and s.iqr == 2 and s.whisker_high == 4 and s.outliers == [100]
    rng = np.random.default_rng(6)
    for _ in range(1000):
        n = int(rng.integers(1, 80))
        x = rng.standard_cauchy(n).tolist() if rng.random() < 0.5 else rng.normal(size=n).tolist()
        st = box_stats(x)
        # partition: every sample is an inlier or an outlier, never both
        inliers = [v for v in x if st.q1 - 1.5 * st.iqr <= v <= st.q3 + 1.5 * st.iqr]
        assert sorted(inliers + st.outliers) == sorted(x)
        assert st.whisker_low == min(inliers) and st.whisker_high == max(inliers)
        # permutation invariance
        perm = list(rng.permutation(x))
        assert box_stats(perm) == st
        # median stability: extending both tails by one value each keeps it
        assert box_stats(x + [min(x) - 1.0, max(x) + 1.0]).median == st.median
    record_property("detail", "1000 samples")


def _boundary_quaternion():
    """A unit quaternion at exactly 10.0 % orientation error from identity."""
    w0 = 0.99
    x0 = math.sqrt(1 - w0 * w0)
    for i in range(-40, 41):
        for j in range(-40, 41):
            q = [w0 + i * 2.0 ** -53, x0 + j * 2.0 ** -56, 0.0, 0.0]
            if orientation_error_pct([1, 0, 0, 0], q) == 10.0:
                return q
    raise AssertionError("no exact boundary quaternion found")


@pytest.mark.criterion(7, "setup gate accepts at exactly 10% and discards just above")
def test_c7_setup_gate(record_property, tmp_path):
    save_mesh(tetra([0, 0, 0], 0.01), tmp_path / "o.obj")
    save_mesh(tetra([0, 0, 0], 0.002), tmp_path / "r.obj")
    checked = []
    for level in ("I", "III"):
        doc = {
            "schema_version": 1, "task_id": f"gate{level}", "level": level, "object_mesh": "o.obj",
            "initial_hand_pose": [0, 0, 0, 1, 0, 0, 0], "desired_hand_pose": [0.1, 0, 0, 1, 0, 0, 0],
        }
        if level == "III":
            doc.update(initial_region="r.obj", desired_region="r.obj")
        write_json(tmp_path / f"{level}.json", doc)
        task = load_task(tmp_path / f"{level}.json")
        ident = [1.0, 0.0, 0.0, 0.0]

        at = validate_setup(task, Pose([0.01, 0, 0], ident))
        assert at.position_pct == 10.0 and at.status is SetupStatus.ACCEPT
        above = validate_setup(task, Pose([0.01 + 1e-12, 0, 0], ident))  # 10.0 + 1e-9 %
        assert above.position_pct == pytest.approx(10.0 + 1e-9, abs=1e-12)
        assert above.status is SetupStatus.DISCARD

        q_at = _boundary_quaternion()
        at = validate_setup(task, Pose([0, 0, 0], q_at))
        assert at.orientation_pct == 10.0 and at.status is SetupStatus.ACCEPT
        p = 10.0 + 1e-9
        w = 1.0 - (p / 100.0) ** 2
        above = validate_setup(task, Pose([0, 0, 0], [w, math.sqrt(1 - w * w), 0.0, 0.0]))
        assert above.orientation_pct == pytest.approx(p, abs=1e-11)
        assert above.status is SetupStatus.DISCARD
        checked.append(level)
    record_property("detail", f"levels {', '.join(checked)}, position and orientation")


@pytest.mark.criterion(8, "repeated eval runs give byte-identical CSV and JSON")
def test_c8_determinism(record_property, tmp_path):
    args = []
    for slug in TABLE4:
        args += [str(DATA / "table4" / slug / "task.json"), str(DATA / "table4" / slug / "trials")]
    for method, (task_path, bundle) in build_table3(tmp_path / "log").items():
        args += [str(task_path), str(bundle)]
    assert cli_main(["eval", *args, "--out", str(tmp_path / "a"), "--group-by", "method"]) == 0
    assert cli_main(["eval", *args, "--out", str(tmp_path / "b"), "--group-by", "method", "--jobs", "4"]) == 0
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert {"summary.csv", "trials.csv", "report.json"} <= set(names)
    assert names == sorted(p.name for p in (tmp_path / "b").iterdir())
    for name in names:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name
    record_property("detail", f"{len(names)} files identical")
