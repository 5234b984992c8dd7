"""Shortest paths along a mesh surface.

Two graph approximations of the surface distance are offered:

``EDGE_DIJKSTRA``
    Dijkstra over the vertex-edge graph, edges weighted by their length.
``STEINER_REFINED``
    The same graph plus three evenly spaced points on every edge, with
    straight segments across each face between points on different edges.
    Original edges are kept, so refined distances never exceed the plain
    edge-graph distances.

Both overestimate the true surface geodesic by an amount bounded by the
mesh resolution.

A distance between two vertices is always computed from the lower-index
endpoint, so ``distance(a, b)`` and ``distance(b, a)`` are the same float.
"""

from __future__ import annotations

import enum
import threading

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from ..errors import DisconnectedVertices
from ..mesh import TriangleMesh, euclidean_metric

STEINER_POINTS_PER_EDGE = 3


class GeodesicMethod(str, enum.Enum):
    EDGE_DIJKSTRA = "EDGE_DIJKSTRA"
    STEINER_REFINED = "STEINER_REFINED"

    @classmethod
    def parse(cls, value) -> "GeodesicMethod":
        if isinstance(value, cls):
            return value
        key = str(value).strip().upper().replace("-", "_")
        try:
            return cls[key]
        except KeyError:
            choices = ", ".join(m.value for m in cls)
            raise ValueError(f"unknown geodesic method {value!r} (choose from {choices})") from None


def steiner_graph(mesh: TriangleMesh, k: int = STEINER_POINTS_PER_EDGE):
    """Node coordinates and weighted edge list of the refined surface graph.

    Nodes ``0 .. n-1`` are the mesh vertices; Steiner nodes follow, ``k`` per
    unique edge, ordered from the edge's lower-index endpoint.
    """
    v = mesh.vertices
    n = mesh.vertex_count
    edges = mesh.edges
    t = np.arange(1, k + 1) / (k + 1)
    a = v[edges[:, 0]]
    b = v[edges[:, 1]]
    steiner = (a[:, None, :] + t[None, :, None] * (b - a)[:, None, :]).reshape(-1, 3)
    coords = np.concatenate([v, steiner])

    edge_id = {(int(i), int(j)): e for e, (i, j) in enumerate(edges)}

    def chain(i, j):
        """Nodes along edge (i, j) from i to j, endpoints included."""
        e = edge_id[(min(i, j), max(i, j))]
        inner = [n + e * k + s for s in range(k)]
        if i > j:
            inner.reverse()
        return [i] + inner + [j]

    links = set()
    for i, j in edges.tolist():
        links.add((i, j))
        c = chain(i, j)
        for p, q in zip(c[:-1], c[1:]):
            links.add((min(p, q), max(p, q)))
    for f in mesh.faces.tolist():
        sides = [chain(f[0], f[1]), chain(f[1], f[2]), chain(f[2], f[0])]
        for s in range(3):
            inner_s = sides[s][1:-1]
            opposite = f[(s + 2) % 3]
            for p in inner_s:
                links.add((min(p, opposite), max(p, opposite)))
            for r in range(s + 1, 3):
                for p in inner_s:
                    for q in sides[r][1:-1]:
                        links.add((min(p, q), max(p, q)))
    pairs = np.array(sorted(links), dtype=np.int64).reshape(-1, 2)
    weights = np.array([euclidean_metric(coords[p], coords[q]) for p, q in pairs])
    return coords, pairs, weights


def _symmetric_csr(pairs, weights, size):
    rows = np.concatenate([pairs[:, 0], pairs[:, 1]])
    cols = np.concatenate([pairs[:, 1], pairs[:, 0]])
    return csr_matrix((np.concatenate([weights, weights]), (rows, cols)), shape=(size, size))


class GeodesicSolver:
    """Vertex-to-vertex surface distances on one mesh.

    Single-source distance rows are cached. The cache is filled under a lock,
    so a solver can be shared between threads; cached and fresh answers are
    identical because rows are never recomputed once stored.
    """

    def __init__(self, mesh: TriangleMesh, method=GeodesicMethod.EDGE_DIJKSTRA):
        self.mesh = mesh
        self.method = GeodesicMethod.parse(method)
        if self.method is GeodesicMethod.EDGE_DIJKSTRA:
            self._graph = mesh.edge_graph
        else:
            coords, pairs, weights = steiner_graph(mesh)
            self._graph = _symmetric_csr(pairs, weights, len(coords))
        self._rows: dict[int, np.ndarray] = {}
        self._lock = threading.Lock()

    def prefetch(self, sources) -> None:
        """Compute and cache distance rows for several sources in one pass."""
        missing = sorted({int(s) for s in sources} - self._rows.keys())
        if not missing:
            return
        n = self.mesh.vertex_count
        rows = dijkstra(self._graph, directed=True, indices=missing)
        rows = np.atleast_2d(rows)[:, :n]
        with self._lock:
            for s, row in zip(missing, rows):
                row = np.array(row)
                row.setflags(write=False)
                self._rows.setdefault(s, row)

    def row(self, source: int) -> np.ndarray:
        """Distances from ``source`` to every vertex (``inf`` if unreachable)."""
        source = int(source)
        cached = self._rows.get(source)
        if cached is None:
            self.prefetch([source])
            cached = self._rows[source]
        return cached

    def distance(self, a: int, b: int) -> float:
        n = self.mesh.vertex_count
        for idx in (a, b):
            if not 0 <= int(idx) < n:
                raise IndexError(f"vertex {idx} out of range for mesh with {n} vertices")
        lo, hi = (int(a), int(b)) if a <= b else (int(b), int(a))
        d = float(self.row(lo)[hi])
        if not np.isfinite(d):
            raise DisconnectedVertices(f"no surface path between vertices {a} and {b}")
        return d


def geodesic_metric(solver: GeodesicSolver, v1: int, v2: int) -> float:
    """Surface distance between two vertices of the solver's mesh."""
    return solver.distance(v1, v2)
