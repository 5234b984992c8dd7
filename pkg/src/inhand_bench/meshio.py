"""OBJ / PLY / STL readers and writers.

Only geometry and connectivity are read; normals, texture coordinates,
colors and materials are ignored. Polygons with more than three corners
are fan-triangulated.
"""

from __future__ import annotations

import logging
import struct
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .errors import EmptyMesh, MeshError, NonFinite, ParseError
from .mesh import TriangleMesh

logger = logging.getLogger(__name__)

FORMATS = ("obj", "ply", "stl")

#: Vertices closer than this (m) are merged when reading STL.
STL_WELD_TOLERANCE = 1e-6


def detect_format(path) -> str:
    suffix = Path(path).suffix.lower().lstrip(".")
    if suffix in FORMATS:
        return suffix
    with open(path, "rb") as fh:
        head = fh.read(256)
    if head.startswith(b"ply"):
        return "ply"
    if head.lstrip().startswith(b"solid") or _looks_like_binary_stl(path):
        return "stl"
    return "obj"


def _looks_like_binary_stl(path) -> bool:
    size = Path(path).stat().st_size
    if size < 84:
        return False
    with open(path, "rb") as fh:
        fh.seek(80)
        (n,) = struct.unpack("<I", fh.read(4))
    return size == 84 + 50 * n


def load_mesh(path, format: str = "auto", units: float = 1.0) -> TriangleMesh:
    """Read a triangle mesh from disk.

    ``units`` is the length of one file unit in meters (0.01 for a file in
    centimeters). STL vertices are welded at :data:`STL_WELD_TOLERANCE`
    after scaling.
    """
    path = Path(path)
    if not path.exists():
        raise ParseError("file does not exist", path=path)
    fmt = detect_format(path) if format in (None, "auto") else format.lower()
    if fmt not in FORMATS:
        raise ParseError(f"unknown mesh format {format!r}", path=path)
    try:
        if fmt == "obj":
            vertices, faces = _read_obj(path)
        elif fmt == "ply":
            vertices, faces = _read_ply(path)
        else:
            vertices, faces = _read_stl(path)
    except ParseError:
        raise
    except (ValueError, struct.error, UnicodeDecodeError, IndexError) as exc:
        raise ParseError(str(exc), path=path) from exc

    vertices = np.asarray(vertices, dtype=np.float64).reshape(-1, 3)
    faces = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
    if len(faces) == 0:
        raise EmptyMesh(f"{path}: mesh has no faces")
    if not np.all(np.isfinite(vertices)):
        raise NonFinite(f"{path}: non-finite vertex coordinate")
    if units != 1.0:
        vertices = vertices * float(units)
    if fmt == "stl":
        vertices, faces = weld(vertices, faces, STL_WELD_TOLERANCE)
    try:
        return TriangleMesh(vertices, faces, name=path.stem)
    except MeshError as exc:
        if isinstance(exc, (EmptyMesh, NonFinite)):
            raise
        raise ParseError(str(exc), path=path) from exc


def weld(vertices: np.ndarray, faces: np.ndarray, tolerance: float):
    """Merge vertices closer than ``tolerance``.

    Each cluster is represented by its lowest-index member; surviving
    vertices keep their relative order. Faces that collapse are dropped.
    """
    n = len(vertices)
    pairs = cKDTree(vertices).query_pairs(tolerance, output_type="ndarray")
    if len(pairs) == 0:
        return vertices, faces
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    _, labels = connected_components(graph, directed=False)
    representative = np.full(labels.max() + 1, n, dtype=np.int64)
    np.minimum.at(representative, labels, np.arange(n))
    keep = np.unique(representative)
    new_index = np.full(n, -1, dtype=np.int64)
    new_index[keep] = np.arange(len(keep))
    remap = new_index[representative[labels]]
    f = remap[faces]
    ok = (f[:, 0] != f[:, 1]) & (f[:, 1] != f[:, 2]) & (f[:, 0] != f[:, 2])
    if not ok.all():
        logger.warning("weld collapsed %d face(s); dropping them", int((~ok).sum()))
    return vertices[keep], f[ok]


def _fan(poly):
    return [(poly[0], poly[k], poly[k + 1]) for k in range(1, len(poly) - 1)]


# --- OBJ -------------------------------------------------------------------


def _read_obj(path):
    vertices, faces = [], []
    with open(path, "r", encoding="utf-8", errors="replace") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            tag = parts[0]
            if tag == "v":
                if len(parts) < 4:
                    raise ParseError("vertex record needs 3 coordinates", path, lineno)
                try:
                    vertices.append([float(x) for x in parts[1:4]])
                except ValueError:
                    raise ParseError(f"bad vertex record {line!r}", path, lineno) from None
            elif tag == "f":
                if len(parts) < 4:
                    raise ParseError("face record needs at least 3 vertices", path, lineno)
                poly = []
                for token in parts[1:]:
                    try:
                        idx = int(token.split("/", 1)[0])
                    except ValueError:
                        raise ParseError(f"bad face index {token!r}", path, lineno) from None
                    if idx < 0:
                        idx = len(vertices) + idx
                    else:
                        idx -= 1
                    if not 0 <= idx < len(vertices):
                        raise ParseError(
                            f"face index {token} out of range ({len(vertices)} vertices)",
                            path,
                            lineno,
                        )
                    poly.append(idx)
                faces.extend(_fan(poly))
    return vertices, faces


def _write_obj(mesh: TriangleMesh, path):
    with open(path, "w", encoding="utf-8") as fh:
        for x, y, z in mesh.vertices.tolist():
            fh.write(f"v {x!r} {y!r} {z!r}\n")
        for a, b, c in (mesh.faces + 1).tolist():
            fh.write(f"f {a} {b} {c}\n")


# --- PLY -------------------------------------------------------------------

_PLY_TYPES = {
    "char": "i1", "int8": "i1", "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2", "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4", "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4", "double": "f8", "float64": "f8",
}


def _read_ply_header(fh, path):
    if fh.readline().strip() != b"ply":
        raise ParseError("missing 'ply' magic", path, 1)
    fmt = None
    elements = []
    lineno = 1
    while True:
        raw = fh.readline()
        lineno += 1
        if not raw:
            raise ParseError("unterminated header", path, lineno)
        parts = raw.decode("ascii", errors="replace").split()
        if not parts or parts[0] in ("comment", "obj_info"):
            continue
        if parts[0] == "format":
            fmt = parts[1]
        elif parts[0] == "element":
            elements.append({"name": parts[1], "count": int(parts[2]), "props": []})
        elif parts[0] == "property":
            if not elements:
                raise ParseError("property before element", path, lineno)
            if parts[1] == "list":
                elements[-1]["props"].append((parts[4], "list", parts[2], parts[3]))
            else:
                elements[-1]["props"].append((parts[2], "scalar", parts[1], None))
        elif parts[0] == "end_header":
            break
        else:
            raise ParseError(f"unknown header line {parts[0]!r}", path, lineno)
    if fmt not in ("ascii", "binary_little_endian", "binary_big_endian"):
        raise ParseError(f"unsupported PLY format {fmt!r}", path)
    return fmt, elements, lineno


def _read_ply(path):
    with open(path, "rb") as fh:
        fmt, elements, header_lines = _read_ply_header(fh, path)
        body = fh.read()
    vertices, faces = None, []
    if fmt == "ascii":
        tokens = body.split()
        pos = 0
        for el in elements:
            rows = []
            for _ in range(el["count"]):
                row = {}
                for name, kind, t1, t2 in el["props"]:
                    if kind == "list":
                        k = int(tokens[pos])
                        row[name] = [int(float(t)) for t in tokens[pos + 1: pos + 1 + k]]
                        pos += 1 + k
                    else:
                        row[name] = float(tokens[pos])
                        pos += 1
                rows.append(row)
            if el["name"] == "vertex":
                vertices = [[r["x"], r["y"], r["z"]] for r in rows]
            elif el["name"] == "face":
                key = _face_key(el, path)
                for r in rows:
                    faces.extend(_fan(r[key]))
    else:
        endian = "<" if fmt == "binary_little_endian" else ">"
        pos = 0
        for el in elements:
            scalar_only = all(kind == "scalar" for _, kind, _, _ in el["props"])
            if scalar_only:
                dtype = np.dtype([(name, endian + _PLY_TYPES[t1]) for name, _, t1, _ in el["props"]])
                arr = np.frombuffer(body, dtype=dtype, count=el["count"], offset=pos)
                pos += dtype.itemsize * el["count"]
                if el["name"] == "vertex":
                    vertices = np.stack(
                        [arr["x"].astype(np.float64), arr["y"].astype(np.float64), arr["z"].astype(np.float64)],
                        axis=1,
                    )
                continue
            key = _face_key(el, path) if el["name"] == "face" else None
            for _ in range(el["count"]):
                row = {}
                for name, kind, t1, t2 in el["props"]:
                    if kind == "list":
                        ct = np.dtype(endian + _PLY_TYPES[t1])
                        it = np.dtype(endian + _PLY_TYPES[t2])
                        k = int(np.frombuffer(body, dtype=ct, count=1, offset=pos)[0])
                        pos += ct.itemsize
                        row[name] = np.frombuffer(body, dtype=it, count=k, offset=pos).tolist()
                        pos += it.itemsize * k
                    else:
                        st = np.dtype(endian + _PLY_TYPES[t1])
                        row[name] = np.frombuffer(body, dtype=st, count=1, offset=pos)[0]
                        pos += st.itemsize
                if key is not None:
                    faces.extend(_fan(row[key]))
    if vertices is None:
        raise ParseError("no vertex element", path)
    nv = len(vertices)
    for tri in faces:
        for idx in tri:
            if not 0 <= idx < nv:
                raise ParseError(f"face index {idx} out of range ({nv} vertices)", path)
    return vertices, faces


def _face_key(el, path):
    for name, kind, _, _ in el["props"]:
        if kind == "list" and name in ("vertex_indices", "vertex_index"):
            return name
    raise ParseError("face element has no vertex_indices list", path)


def _write_ply(mesh: TriangleMesh, path, binary: bool = True):
    header = (
        "ply\n"
        f"format {'binary_little_endian' if binary else 'ascii'} 1.0\n"
        f"element vertex {mesh.vertex_count}\n"
        "property double x\nproperty double y\nproperty double z\n"
        f"element face {mesh.face_count}\n"
        "property list uchar int vertex_indices\n"
        "end_header\n"
    )
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        if binary:
            fh.write(mesh.vertices.astype("<f8").tobytes())
            rec = np.zeros(mesh.face_count, dtype=[("n", "u1"), ("i", "<i4", (3,))])
            rec["n"] = 3
            rec["i"] = mesh.faces
            fh.write(rec.tobytes())
        else:
            for x, y, z in mesh.vertices.tolist():
                fh.write(f"{x!r} {y!r} {z!r}\n".encode("ascii"))
            for a, b, c in mesh.faces.tolist():
                fh.write(f"3 {a} {b} {c}\n".encode("ascii"))


# --- STL -------------------------------------------------------------------


def _read_stl(path):
    if _looks_like_binary_stl(path):
        with open(path, "rb") as fh:
            fh.seek(80)
            (n,) = struct.unpack("<I", fh.read(4))
            dtype = np.dtype([("normal", "<f4", (3,)), ("v", "<f4", (3, 3)), ("attr", "<u2")])
            rec = np.frombuffer(fh.read(), dtype=dtype, count=n)
        tri = rec["v"].astype(np.float64)
    else:
        with open(path, "rb") as fh:
            head = fh.read(84)
        if not head.lstrip().startswith(b"solid") and b"\0" in head:
            raise ParseError("binary STL size does not match its triangle count", path)
        coords = []
        with open(path, "r", encoding="utf-8", errors="replace") as fh:
            for lineno, raw in enumerate(fh, start=1):
                parts = raw.split()
                if parts and parts[0] == "vertex":
                    if len(parts) != 4:
                        raise ParseError("vertex record needs 3 coordinates", path, lineno)
                    try:
                        coords.append([float(x) for x in parts[1:4]])
                    except ValueError:
                        raise ParseError(f"bad vertex record {raw.strip()!r}", path, lineno) from None
        if len(coords) % 3:
            raise ParseError("vertex count is not a multiple of 3", path)
        tri = np.asarray(coords, dtype=np.float64).reshape(-1, 3, 3)
    vertices = tri.reshape(-1, 3)
    faces = np.arange(len(vertices)).reshape(-1, 3)
    return vertices, faces


def _write_stl(mesh: TriangleMesh, path, binary: bool = True):
    tri = mesh.vertices[mesh.faces]
    normals = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    lengths = np.linalg.norm(normals, axis=1, keepdims=True)
    normals = np.divide(normals, lengths, out=np.zeros_like(normals), where=lengths > 0)
    if binary:
        dtype = np.dtype([("normal", "<f4", (3,)), ("v", "<f4", (3, 3)), ("attr", "<u2")])
        rec = np.zeros(mesh.face_count, dtype=dtype)
        rec["normal"] = normals
        rec["v"] = tri
        with open(path, "wb") as fh:
            fh.write(b"binary STL".ljust(80, b" "))
            fh.write(struct.pack("<I", mesh.face_count))
            fh.write(rec.tobytes())
        return
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("solid mesh\n")
        for nrm, t in zip(normals.tolist(), tri.tolist()):
            fh.write(f"facet normal {nrm[0]!r} {nrm[1]!r} {nrm[2]!r}\n outer loop\n")
            for x, y, z in t:
                fh.write(f"  vertex {x!r} {y!r} {z!r}\n")
            fh.write(" endloop\nendfacet\n")
        fh.write("endsolid mesh\n")


def save_mesh(mesh: TriangleMesh, path, format: str = "auto", binary: bool = True):
    """Write ``mesh``; OBJ and PLY preserve coordinates exactly."""
    path = Path(path)
    fmt = path.suffix.lower().lstrip(".") if format in (None, "auto") else format.lower()
    if fmt == "obj":
        _write_obj(mesh, path)
    elif fmt == "ply":
        _write_ply(mesh, path, binary=binary)
    elif fmt == "stl":
        _write_stl(mesh, path, binary=binary)
    else:
        raise ValueError(f"unknown mesh format {format!r}")
