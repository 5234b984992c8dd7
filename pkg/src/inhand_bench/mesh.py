"""Indexed triangle meshes and the vertex queries used by contact scoring."""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .errors import EmptyMesh, MeshError, NonFinite, TooFewVertices

#: Triangles with area below this (m^2) are degenerate.
DEGENERATE_AREA = 1e-12


def euclidean_metric(p1, p2) -> float:
    """Straight-line distance between two points.

    This is the single definition of point distance in the package: edge
    weights, nearest-vertex queries and Euclidean contact error all go
    through it so that independently computed results agree bit for bit.
    """
    return math.dist(p1, p2)


class TriangleMesh:
    """Immutable indexed triangle mesh.

    Coordinates are stored in meters. Derived structures (edge graph,
    KD-tree, areas) are built on first use and cached; construction is
    guarded by a per-instance lock so meshes can be shared across threads.
    """

    def __init__(self, vertices, faces, name: str = ""):
        v = np.array(vertices, dtype=np.float64, copy=True).reshape(-1, 3)
        f = np.array(faces, dtype=np.int64, copy=True).reshape(-1, 3)
        if not np.all(np.isfinite(v)):
            raise NonFinite("mesh has non-finite vertex coordinates")
        if len(f):
            if f.min() < 0 or f.max() >= len(v):
                raise MeshError(
                    f"face index out of range (mesh has {len(v)} vertices)"
                )
            repeated = (f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 0] == f[:, 2])
            if repeated.any():
                raise MeshError(
                    f"face {int(np.flatnonzero(repeated)[0])} references a vertex twice"
                )
        v.setflags(write=False)
        f.setflags(write=False)
        self._vertices = v
        self._faces = f
        self.name = name
        self._lock = threading.RLock()
        self._cache: dict = {}

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"<TriangleMesh{label} V={self.vertex_count} F={self.face_count}>"

    @property
    def vertices(self) -> np.ndarray:
        return self._vertices

    @property
    def faces(self) -> np.ndarray:
        return self._faces

    @property
    def vertex_count(self) -> int:
        return len(self._vertices)

    @property
    def face_count(self) -> int:
        return len(self._faces)

    def _cached(self, key, build):
        try:
            return self._cache[key]
        except KeyError:
            pass
        with self._lock:
            if key not in self._cache:
                value = build()
                if isinstance(value, np.ndarray):
                    value.setflags(write=False)
                self._cache[key] = value
            return self._cache[key]

    # --- derived geometry --------------------------------------------------

    @property
    def bounds(self) -> np.ndarray:
        """Axis-aligned bounding box as a (2, 3) array of min and max corners."""
        def build():
            if self.vertex_count == 0:
                return np.zeros((2, 3))
            return np.stack([self._vertices.min(axis=0), self._vertices.max(axis=0)])

        return self._cached("bounds", build)

    @property
    def face_areas(self) -> np.ndarray:
        def build():
            tri = self._vertices[self._faces]
            cross = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
            return 0.5 * np.linalg.norm(cross, axis=1)

        return self._cached("face_areas", build)

    @property
    def degenerate_faces(self) -> np.ndarray:
        """Indices of faces with area below :data:`DEGENERATE_AREA`."""
        return self._cached(
            "degenerate", lambda: np.flatnonzero(self.face_areas < DEGENERATE_AREA)
        )

    @property
    def edges(self) -> np.ndarray:
        """Unique undirected edges as sorted ``(i, j)`` pairs with ``i < j``."""
        def build():
            f = self._faces
            e = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
            e.sort(axis=1)
            if len(e) == 0:
                return np.zeros((0, 2), dtype=np.int64)
            return np.unique(e, axis=0)

        return self._cached("edges", build)

    @property
    def edge_lengths(self) -> np.ndarray:
        def build():
            v = self._vertices
            return np.array(
                [euclidean_metric(v[i], v[j]) for i, j in self.edges], dtype=np.float64
            )

        return self._cached("edge_lengths", build)

    @property
    def edge_graph(self) -> csr_matrix:
        """Symmetric sparse adjacency matrix weighted by edge length.

        Zero-length edges (coincident vertices) are kept as explicit entries.
        """
        def build():
            e = self.edges
            w = self.edge_lengths
            n = self.vertex_count
            rows = np.concatenate([e[:, 0], e[:, 1]])
            cols = np.concatenate([e[:, 1], e[:, 0]])
            return csr_matrix((np.concatenate([w, w]), (rows, cols)), shape=(n, n))

        return self._cached("edge_graph", build)

    @property
    def kdtree(self) -> cKDTree:
        return self._cached("kdtree", lambda: cKDTree(self._vertices))

    def component_labels(self) -> tuple[int, np.ndarray]:
        """Connected components of the vertex-edge graph (isolated vertices included)."""
        return self._cached(
            "components",
            lambda: connected_components(self.edge_graph, directed=False),
        )

    def transformed(self, rotation: np.ndarray, translation) -> "TriangleMesh":
        """Copy of the mesh with ``x -> R x + t`` applied to every vertex."""
        v = self._vertices @ np.asarray(rotation, dtype=np.float64).T + np.asarray(
            translation, dtype=np.float64
        )
        return TriangleMesh(v, self._faces, name=self.name)


@dataclass
class MeshValidationReport:
    vertex_count: int
    face_count: int
    degenerate_face_indices: list = field(default_factory=list)
    connected_component_count: int = 0
    is_watertight: bool = False
    g_min: Optional[float] = None

    @property
    def is_valid(self) -> bool:
        return self.face_count > 0 and not self.degenerate_face_indices

    def as_dict(self) -> dict:
        return {
            "vertex_count": self.vertex_count,
            "face_count": self.face_count,
            "degenerate_face_indices": list(self.degenerate_face_indices),
            "connected_component_count": self.connected_component_count,
            "is_watertight": self.is_watertight,
            "g_min": self.g_min,
            "valid": self.is_valid,
        }


def validate_mesh(mesh: TriangleMesh) -> MeshValidationReport:
    """Inspect a mesh; problems are reported, never raised."""
    faces = mesh.faces
    report = MeshValidationReport(
        vertex_count=mesh.vertex_count,
        face_count=mesh.face_count,
        degenerate_face_indices=[int(i) for i in mesh.degenerate_faces],
    )
    if mesh.face_count:
        _, labels = mesh.component_labels()
        used = np.unique(faces)
        report.connected_component_count = int(len(np.unique(labels[used])))
        e = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
        e.sort(axis=1)
        _, counts = np.unique(e, axis=0, return_counts=True)
        report.is_watertight = bool(np.all(counts == 2))
    if mesh.vertex_count >= 2:
        report.g_min = g_min(mesh)
    return report


def min_vertex(point, mesh: TriangleMesh) -> int:
    """Index of the vertex nearest to ``point``; ties go to the lowest index."""
    if mesh.vertex_count == 0:
        raise EmptyMesh("cannot query the nearest vertex of an empty mesh")
    p = np.asarray(point, dtype=np.float64)
    d_tree, _ = mesh.kdtree.query(p)
    # The tree only narrows the search; the answer is decided by the
    # canonical distance so it matches a plain linear scan exactly.
    radius = d_tree * (1.0 + 1e-9) + 1e-15
    candidates = sorted(mesh.kdtree.query_ball_point(p, radius))
    v = mesh.vertices
    best, best_d = -1, math.inf
    for idx in candidates:
        d = euclidean_metric(p, v[idx])
        if d < best_d:
            best, best_d = idx, d
    return best


def min_vertices(points, mesh: TriangleMesh) -> list[int]:
    return [min_vertex(p, mesh) for p in points]


def g_min(mesh: TriangleMesh) -> float:
    """Smallest distance between any two distinct vertices of the mesh."""
    n = mesh.vertex_count
    if n < 2:
        raise TooFewVertices("g_min needs at least two vertices")
    d, _ = mesh.kdtree.query(mesh.vertices, k=2)
    nearest = float(d[:, 1].min())
    radius = nearest * (1.0 + 1e-9) + 1e-15
    pairs = mesh.kdtree.query_pairs(radius, output_type="ndarray")
    v = mesh.vertices
    return min(euclidean_metric(v[i], v[j]) for i, j in pairs)
