import math

import numpy as np
import pytest

from inhand_bench.errors import DisconnectedVertices, EmptyRegionProjection, NoRobotContact
from inhand_bench.geometry.contact import (
    ContactMetric,
    contact_region_error,
    contact_region_result,
    max_min_distance,
    project_onto,
)
from inhand_bench.geometry.geodesic import GeodesicSolver
from inhand_bench.mesh import TriangleMesh
from inhand_bench.pose import quat_to_matrix

from oracles import contact_error_oracle, random_fixture
from shapes import folded_grid, grid, tetra, vertical_triangle


def left_column_region(n, spacing=0.1):
    """Thin strip lying on the x = 0 column of a grid, crossing z = 0."""
    y = n * spacing
    v = [[0.0, -0.01, -0.01], [0.0, y + 0.01, -0.01], [0.0, y / 2, 0.01], [0.0, -0.01, 0.01]]
    return TriangleMesh(v, [[0, 1, 2], [0, 2, 3]], name="strip")


def test_grid_probe_distance():
    g = grid(10, 10)
    region = left_column_region(10)
    probe = vertical_triangle(0.3, 0.5, half=0.02)
    for metric in ContactMetric:
        d = contact_region_error(g, [probe], region, metric, tolerance=0.0)
        assert d == pytest.approx(0.3, abs=1e-12)


def test_probe_inside_region_is_zero():
    g = grid(10, 10)
    region = left_column_region(10)
    probe = vertical_triangle(0.0, 0.5, half=0.02)
    assert contact_region_error(g, [probe], region, tolerance=0.0) == 0.0


def test_fold_separates_metrics():
    f = folded_grid(6, 4, 3)
    region = left_column_region(4)
    # probe touching the raised flap at height 0.2
    v = [[0.29, 0.2, 0.2], [0.31, 0.18, 0.2], [0.31, 0.22, 0.2]]
    probe = TriangleMesh(v, [[0, 1, 2]])
    euc = contact_region_error(f, [probe], region, ContactMetric.EUCLIDEAN, 0.0)
    geo = contact_region_error(f, [probe], region, ContactMetric.GEODESIC, 0.0)
    assert euc == pytest.approx(math.hypot(0.3, 0.2))
    assert geo == pytest.approx(0.5)
    assert geo > euc


def test_worst_link_wins():
    g = grid(10, 10)
    region = left_column_region(10)
    near = vertical_triangle(0.1, 0.5, half=0.02)
    far = vertical_triangle(0.7, 0.2, half=0.02)
    res = contact_region_result(g, [near, far], region, tolerance=0.0)
    assert res.max_d == pytest.approx(0.7)
    assert res.worst_vertex == 7 * 11 + 2


def test_tolerance_catches_hovering_link():
    g = grid(4, 4)
    region = left_column_region(4)
    hover = tetra([0.2, 0.2, 0.003], 0.001)
    with pytest.raises(NoRobotContact):
        contact_region_error(g, [hover], region, tolerance=0.0)
    assert contact_region_error(g, [hover], region, tolerance=0.003) == pytest.approx(0.2)


def test_region_off_object():
    g = grid(4, 4)
    with pytest.raises(EmptyRegionProjection):
        contact_region_error(g, [vertical_triangle(0.2, 0.2)], tetra([5, 5, 5]), tolerance=0.0)


def test_unreachable_vertices():
    a = grid(2, 2, 0.1)
    b = grid(2, 2, 0.1, origin=(1.0, 0.0, 0.0))
    obj = TriangleMesh(np.vstack([a.vertices, b.vertices]), np.vstack([a.faces, b.faces + 9]))
    solver = GeodesicSolver(obj)
    # region spans both islands: the unreachable region vertex is skipped
    d, worst = max_min_distance(obj, [4], [0, 9], ContactMetric.GEODESIC, solver)
    assert worst == 4
    assert d == solver.distance(0, 4)
    # a contact with no path to any region vertex is an error, not a zero
    with pytest.raises(DisconnectedVertices):
        max_min_distance(obj, [13], [0], ContactMetric.GEODESIC, solver)


def test_solver_for_other_mesh_rejected():
    g1, g2 = grid(2, 2), grid(3, 3)
    with pytest.raises(ValueError):
        max_min_distance(g1, [0], [1], ContactMetric.GEODESIC, GeodesicSolver(g2))


def test_project_onto_dedups_in_order():
    g = grid(4, 4)
    ids = project_onto(vertical_triangle(0.2, 0.2, half=0.01), g, 0.0)
    assert ids == [12]


def test_monotone_in_region_growth():
    g = grid(10, 10)
    probe = vertical_triangle(0.65, 0.5, half=0.02)
    strip = left_column_region(10)
    wider = TriangleMesh(strip.vertices + [0.3, 0.0, 0.0], strip.faces)
    both = TriangleMesh(np.vstack([strip.vertices, wider.vertices]), np.vstack([strip.faces, strip.faces + 4]))
    d_small = contact_region_error(g, [probe], strip, tolerance=0.0)
    d_big = contact_region_error(g, [probe], both, tolerance=0.0)
    assert d_big <= d_small
    assert d_big == pytest.approx(0.4)


@pytest.mark.parametrize("seed", [0, 4, 8])
def test_rigid_motion_invariance(seed):
    obj, links, region, tol = random_fixture(seed)
    rng = np.random.default_rng(seed)
    q = rng.normal(size=4)
    r = quat_to_matrix(q / np.linalg.norm(q))
    t = rng.normal(size=3)

    def move(m):
        return TriangleMesh(m.vertices @ r.T + t, m.faces)

    for metric in ContactMetric:
        before = contact_region_error(obj, links, region, metric, tol)
        after = contact_region_error(move(obj), [move(m) for m in links], move(region), metric, tol)
        assert after == pytest.approx(before, rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("seed", range(6))
def test_matches_oracle(seed):
    obj, links, region, tol = random_fixture(seed)
    for metric in ("EUCLIDEAN", "GEODESIC"):
        assert contact_region_error(obj, links, region, metric, tol) == contact_error_oracle(
            obj, links, region, metric, tol
        )
