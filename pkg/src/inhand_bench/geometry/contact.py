"""Contact-region error between a hand and a desired region on an object."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from ..errors import DisconnectedVertices, EmptyRegionProjection, NoRobotContact
from ..mesh import TriangleMesh, euclidean_metric, min_vertex
from .geodesic import GeodesicMethod, GeodesicSolver
from .intersect import intersect

#: Default proximity tolerance (m) for deciding that two surfaces touch.
DEFAULT_CONTACT_TOLERANCE = 0.002


class ContactMetric(str, enum.Enum):
    EUCLIDEAN = "EUCLIDEAN"
    GEODESIC = "GEODESIC"


@dataclass(frozen=True)
class ContactResult:
    max_d: float
    region_vertices: tuple  # V_c, object vertex ids of the projected region
    contact_vertices: tuple  # P_r, object vertex ids touched by the hand
    worst_vertex: int  # element of P_r realizing max_d


def project_onto(mesh: TriangleMesh, obj: TriangleMesh, tolerance: float) -> list[int]:
    """Object vertices nearest to the points where ``mesh`` meets ``obj``.

    Returned in first-seen order without repeats; repeats cannot change a
    max-min distance.
    """
    seen: dict[int, None] = {}
    for p in intersect(mesh, obj, tolerance).points:
        seen.setdefault(min_vertex(p, obj), None)
    return list(seen)


def _euclidean_max_min(obj, p_r, v_c):
    v = obj.vertices
    region = v[v_c]
    tree = cKDTree(region)
    worst, max_d = p_r[0], 0.0
    for vid in p_r:
        d_tree, _ = tree.query(v[vid])
        radius = d_tree * (1.0 + 1e-9) + 1e-15
        min_d = math.inf
        for k in tree.query_ball_point(v[vid], radius):
            d = euclidean_metric(v[vid], region[k])
            if d < min_d:
                min_d = d
        if min_d > max_d:
            worst, max_d = vid, min_d
    return max_d, worst


def _geodesic_max_min(solver, p_r, v_c):
    solver.prefetch(set(p_r) | set(v_c))
    targets = np.asarray(v_c, dtype=np.int64)
    worst, max_d = p_r[0], 0.0
    for vid in p_r:
        # canonical direction: row of the lower index
        own = solver.row(vid)[targets]
        other = np.array([solver.row(p)[vid] for p in v_c])
        d = np.where(targets >= vid, own, other)
        d = d[np.isfinite(d)]
        if len(d) == 0:
            raise DisconnectedVertices(
                f"object vertex {vid} has no surface path to the desired region"
            )
        min_d = float(d.min())
        if min_d > max_d:
            worst, max_d = vid, min_d
    return max_d, worst


def max_min_distance(
    obj: TriangleMesh,
    p_r: Sequence[int],
    v_c: Sequence[int],
    metric=ContactMetric.EUCLIDEAN,
    solver: Optional[GeodesicSolver] = None,
):
    """Largest distance from a hand contact vertex to its nearest region vertex.

    Returns ``(max_d, worst_vertex)``.
    """
    metric = ContactMetric(metric)
    p_r = list(p_r)
    v_c = list(v_c)
    if not v_c:
        raise EmptyRegionProjection("desired contact region has no vertices on the object")
    if not p_r:
        raise NoRobotContact("hand has no contact vertices on the object")
    if metric is ContactMetric.EUCLIDEAN:
        return _euclidean_max_min(obj, p_r, v_c)
    if solver is None:
        solver = GeodesicSolver(obj)
    elif solver.mesh is not obj:
        raise ValueError("geodesic solver was built for a different mesh")
    return _geodesic_max_min(solver, p_r, v_c)


def contact_region_result(
    obj: TriangleMesh,
    links: Sequence[TriangleMesh],
    region: TriangleMesh,
    metric=ContactMetric.EUCLIDEAN,
    tolerance: float = DEFAULT_CONTACT_TOLERANCE,
    solver: Optional[GeodesicSolver] = None,
    geodesic_method=GeodesicMethod.EDGE_DIJKSTRA,
) -> ContactResult:
    if not links:
        raise ValueError("at least one link mesh is required")
    v_c = project_onto(region, obj, tolerance)
    if not v_c:
        raise EmptyRegionProjection(
            f"desired region does not meet the object within {tolerance} m"
        )
    seen: dict[int, None] = {}
    for link in links:
        for vid in project_onto(link, obj, tolerance):
            seen.setdefault(vid, None)
    p_r = list(seen)
    if not p_r:
        raise NoRobotContact(f"no link touches the object within {tolerance} m")
    metric = ContactMetric(metric)
    if metric is ContactMetric.GEODESIC and solver is None:
        solver = GeodesicSolver(obj, geodesic_method)
    max_d, worst = max_min_distance(obj, p_r, v_c, metric, solver)
    return ContactResult(max_d, tuple(v_c), tuple(p_r), int(worst))


def contact_region_error(
    obj: TriangleMesh,
    links: Sequence[TriangleMesh],
    region: TriangleMesh,
    metric=ContactMetric.EUCLIDEAN,
    tolerance: float = DEFAULT_CONTACT_TOLERANCE,
    solver: Optional[GeodesicSolver] = None,
    geodesic_method=GeodesicMethod.EDGE_DIJKSTRA,
) -> float:
    """Worst-case distance (m) from the hand's contacts to the desired region.

    Both the region and every link are projected onto object vertices; the
    result is the largest, over hand contact vertices, of the distance to
    the closest region vertex. Zero when every contact lies in the region.
    """
    return contact_region_result(
        obj, links, region, metric, tolerance, solver, geodesic_method
    ).max_d
