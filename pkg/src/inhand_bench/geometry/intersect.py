"""Triangle-mesh intersection and proximity sampling.

For every face pair of two meshes that touches within a tolerance, a few
sample points are produced:

* crossing triangles contribute both ends and the midpoint of their
  intersection segment,
* coplanar overlapping triangles contribute the corners and centroid of
  the overlap polygon,
* disjoint triangles closer than the tolerance contribute the midpoint of
  their closest-point pair.

Degenerate faces (area below ``mesh.DEGENERATE_AREA``) never participate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidTolerance
from ..mesh import TriangleMesh

# Relative slack for on-plane / on-edge decisions, scaled by triangle size.
_REL_EPS = 1e-12


@dataclass(frozen=True)
class IntersectionPointSet:
    points: np.ndarray  # (k, 3)
    source_face_pairs: np.ndarray  # (k, 2) face in A, face in B

    def __len__(self):
        return len(self.points)

    @property
    def is_empty(self) -> bool:
        return len(self.points) == 0


def _closest_on_triangle(p, a, b, c):
    # Ericson, Real-Time Collision Detection, 5.1.5
    ab = b - a
    ac = c - a
    ap = p - a
    d1 = ab @ ap
    d2 = ac @ ap
    if d1 <= 0 and d2 <= 0:
        return a
    bp = p - b
    d3 = ab @ bp
    d4 = ac @ bp
    if d3 >= 0 and d4 <= d3:
        return b
    vc = d1 * d4 - d3 * d2
    if vc <= 0 and d1 >= 0 and d3 <= 0:
        return a + (d1 / (d1 - d3)) * ab
    cp = p - c
    d5 = ab @ cp
    d6 = ac @ cp
    if d6 >= 0 and d5 <= d6:
        return c
    vb = d5 * d2 - d1 * d6
    if vb <= 0 and d2 >= 0 and d6 <= 0:
        return a + (d2 / (d2 - d6)) * ac
    va = d3 * d6 - d5 * d4
    if va <= 0 and (d4 - d3) >= 0 and (d5 - d6) >= 0:
        w = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        return b + w * (c - b)
    denom = 1.0 / (va + vb + vc)
    return a + ab * (vb * denom) + ac * (vc * denom)


def _closest_segment_segment(p1, q1, p2, q2):
    d1 = q1 - p1
    d2 = q2 - p2
    r = p1 - p2
    a = d1 @ d1
    e = d2 @ d2
    f = d2 @ r
    if a <= 0 and e <= 0:
        return p1, p2
    if a <= 0:
        s = 0.0
        t = min(max(f / e, 0.0), 1.0)
    else:
        c = d1 @ r
        if e <= 0:
            t = 0.0
            s = min(max(-c / a, 0.0), 1.0)
        else:
            b = d1 @ d2
            denom = a * e - b * b
            s = min(max((b * f - c * e) / denom, 0.0), 1.0) if denom > 0 else 0.0
            t = (b * s + f) / e
            if t < 0:
                t = 0.0
                s = min(max(-c / a, 0.0), 1.0)
            elif t > 1:
                t = 1.0
                s = min(max((b - c) / a, 0.0), 1.0)
    return p1 + d1 * s, p2 + d2 * t


def triangle_distance(ta: np.ndarray, tb: np.ndarray):
    """Distance between two disjoint triangles and the closest-point pair.

    Only valid when the triangles do not intersect; crossing pairs must be
    handled before calling this.
    """
    best = (np.inf, None, None)
    for i in range(3):
        q = _closest_on_triangle(ta[i], tb[0], tb[1], tb[2])
        d = float(np.linalg.norm(ta[i] - q))
        if d < best[0]:
            best = (d, ta[i], q)
        q = _closest_on_triangle(tb[i], ta[0], ta[1], ta[2])
        d = float(np.linalg.norm(tb[i] - q))
        if d < best[0]:
            best = (d, q, tb[i])
    for i in range(3):
        for j in range(3):
            pa, pb = _closest_segment_segment(ta[i], ta[(i + 1) % 3], tb[j], tb[(j + 1) % 3])
            d = float(np.linalg.norm(pa - pb))
            if d < best[0]:
                best = (d, pa, pb)
    return best


def _clip_segment_to_triangle(p, q, tri, normal, eps):
    """Part of segment ``pq`` (lying in the triangle's plane) inside ``tri``."""
    t0, t1 = 0.0, 1.0
    d = q - p
    for k in range(3):
        a = tri[k]
        b = tri[(k + 1) % 3]
        inward = np.cross(normal, b - a)
        num = (p - a) @ inward
        den = d @ inward
        slack = eps * np.linalg.norm(inward)
        if abs(den) <= 1e-300:
            if num < -slack:
                return []
            continue
        t = -num / den
        if den > 0:
            t0 = max(t0, t - slack / abs(den))
        else:
            t1 = min(t1, t + slack / abs(den))
        if t0 > t1:
            return []
    t0, t1 = max(t0, 0.0), min(t1, 1.0)
    return [p + t0 * d, p + t1 * d]


def _inside(point, tri, normal, eps):
    for k in range(3):
        a = tri[k]
        b = tri[(k + 1) % 3]
        inward = np.cross(normal, b - a)
        if (point - a) @ inward < -eps * np.linalg.norm(inward):
            return False
    return True


def _edges_through(ta, da, tb, nb, eps):
    """Points where edges of ``ta`` meet triangle ``tb``.

    ``da`` holds signed distances of ``ta``'s corners to ``tb``'s plane.
    """
    out = []
    for i in range(3):
        j = (i + 1) % 3
        si, sj = da[i], da[j]
        on_i, on_j = abs(si) <= eps, abs(sj) <= eps
        if on_i and on_j:
            out.extend(_clip_segment_to_triangle(ta[i], ta[j], tb, nb, eps))
        elif on_i:
            if _inside(ta[i], tb, nb, eps):
                out.append(ta[i])
        elif on_j:
            continue  # handled as the start of the next edge
        elif (si < 0) != (sj < 0):
            t = si / (si - sj)
            p = ta[i] + t * (ta[j] - ta[i])
            if _inside(p, tb, nb, eps):
                out.append(p)
    return out


def _clip_polygon(poly, tri, normal, eps):
    """Sutherland-Hodgman clip of a coplanar polygon by a triangle."""
    out = list(poly)
    for k in range(3):
        if not out:
            break
        a = tri[k]
        b = tri[(k + 1) % 3]
        inward = np.cross(normal, b - a)
        slack = eps * np.linalg.norm(inward)
        src, out = out, []
        for idx, cur in enumerate(src):
            prev = src[idx - 1]
            dc = (cur - a) @ inward
            dp = (prev - a) @ inward
            if dc >= -slack:
                if dp < -slack:
                    out.append(prev + (dp / (dp - dc)) * (cur - prev))
                out.append(cur)
            elif dp >= -slack:
                out.append(prev + (dp / (dp - dc)) * (cur - prev))
    return out


def _unique_points(points):
    uniq = []
    for p in points:
        if not any(np.array_equal(p, u) for u in uniq):
            uniq.append(p)
    return uniq


def triangle_pair_points(ta, tb, tolerance: float = 0.0) -> list:
    """Sample points for one triangle pair, or ``[]`` if they are farther
    apart than ``tolerance``."""
    ta = np.asarray(ta, dtype=np.float64)
    tb = np.asarray(tb, dtype=np.float64)
    na = np.cross(ta[1] - ta[0], ta[2] - ta[0])
    nb = np.cross(tb[1] - tb[0], tb[2] - tb[0])
    na = na / np.linalg.norm(na)
    nb = nb / np.linalg.norm(nb)
    scale = max(np.ptp(ta, axis=0).max(), np.ptp(tb, axis=0).max())
    eps = _REL_EPS * scale

    db = (tb - ta[0]) @ na  # corners of B against plane A
    da = (ta - tb[0]) @ nb
    separated = db.min() > eps or db.max() < -eps or da.min() > eps or da.max() < -eps

    if not separated:
        if np.all(np.abs(db) <= eps):
            flat = [p - ((p - ta[0]) @ na) * na for p in tb]
            poly = _unique_points(_clip_polygon(flat, ta, na, eps))
            if poly:
                return poly + [np.mean(poly, axis=0)]
        else:
            hits = _edges_through(ta, da, tb, nb, eps) + _edges_through(tb, db, ta, na, eps)
            if hits:
                hits = np.array(hits)
                if len(hits) == 1:
                    return [hits[0]]
                diff = hits[:, None, :] - hits[None, :, :]
                dist = np.einsum("ijk,ijk->ij", diff, diff)
                i, j = np.unravel_index(int(np.argmax(dist)), dist.shape)
                if dist[i, j] == 0:
                    return [hits[i]]
                return [hits[i], hits[j], 0.5 * (hits[i] + hits[j])]

    if tolerance > 0:
        d, pa, pb = triangle_distance(ta, tb)
        if d <= tolerance:
            return [0.5 * (pa + pb)]
    return []


def _candidate_pairs(mesh_a: TriangleMesh, mesh_b: TriangleMesh, tolerance: float):
    """Face pairs whose tolerance-inflated bounding boxes overlap."""
    keep_a = np.setdiff1d(np.arange(mesh_a.face_count), mesh_a.degenerate_faces)
    keep_b = np.setdiff1d(np.arange(mesh_b.face_count), mesh_b.degenerate_faces)
    if len(keep_a) == 0 or len(keep_b) == 0:
        return []
    tri_a = mesh_a.vertices[mesh_a.faces[keep_a]]
    tri_b = mesh_b.vertices[mesh_b.faces[keep_b]]
    lo_a, hi_a = tri_a.min(axis=1), tri_a.max(axis=1)
    lo_b, hi_b = tri_b.min(axis=1), tri_b.max(axis=1)
    pad = tolerance + 1e-9 * max(np.ptp(mesh_a.bounds, axis=0).max(), np.ptp(mesh_b.bounds, axis=0).max(), 1.0)
    pairs = []
    order = np.argsort(lo_b[:, 0], kind="stable")
    lo_b_sorted_x = lo_b[order, 0]
    for ia in range(len(keep_a)):
        # sweep on x: only faces of B starting left of this face's right end
        stop = np.searchsorted(lo_b_sorted_x, hi_a[ia, 0] + pad, side="right")
        cand = order[:stop]
        ok = np.all(lo_b[cand] <= hi_a[ia] + pad, axis=1) & np.all(hi_b[cand] >= lo_a[ia] - pad, axis=1)
        for ib in np.sort(cand[ok]):
            pairs.append((int(keep_a[ia]), int(keep_b[ib])))
    return pairs


def intersect(mesh_a: TriangleMesh, mesh_b: TriangleMesh, tolerance: float = 0.0) -> IntersectionPointSet:
    """Sample points where faces of ``mesh_a`` come within ``tolerance`` of
    faces of ``mesh_b``. Results are ordered by face of A, then face of B."""
    if tolerance < 0 or not np.isfinite(tolerance):
        raise InvalidTolerance(f"tolerance must be a finite value >= 0, got {tolerance}")
    points, pairs = [], []
    va, fa = mesh_a.vertices, mesh_a.faces
    vb, fb = mesh_b.vertices, mesh_b.faces
    for ia, ib in _candidate_pairs(mesh_a, mesh_b, tolerance):
        for p in triangle_pair_points(va[fa[ia]], vb[fb[ib]], tolerance):
            points.append(p)
            pairs.append((ia, ib))
    return IntersectionPointSet(
        points=np.array(points, dtype=np.float64).reshape(-1, 3),
        source_face_pairs=np.array(pairs, dtype=np.int64).reshape(-1, 2),
    )
