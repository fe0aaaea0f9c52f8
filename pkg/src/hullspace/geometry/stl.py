"""STL file I/O.

Binary layout: 80-byte header, little-endian u32 facet count, then 50-byte
facets (normal f32x3, three vertices f32x3, u16 attribute written as zero).
ASCII follows the solid / facet normal / outer loop / vertex grammar.

Shared vertices are welded at exact coordinate equality on read; no epsilon
snapping.
"""

import struct

import numpy as np

from ..errors import STLParseError
from .mesh import TriMesh, _is_watertight

_BINARY_HEADER = b"hullspace binary stl".ljust(80, b" ")


def read_stl(path):
    """Read a binary or ASCII STL file into a welded TriMesh.

    The closed flag is set when the welded mesh is watertight and
    consistently oriented.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) == 0:
        raise STLParseError("empty STL file", offset=0)

    if len(data) >= 84:
        (count,) = struct.unpack_from("<I", data, 80)
        if len(data) == 84 + 50 * count:
            return _from_facets(_parse_binary(data, count))
    if data.lstrip()[:5] == b"solid":
        return _from_facets(_parse_ascii(data))
    if len(data) < 84:
        raise STLParseError("truncated binary STL header", offset=len(data))
    (count,) = struct.unpack_from("<I", data, 80)
    raise STLParseError(
        f"binary STL declares {count} facets but holds "
        f"{(len(data) - 84) // 50} (file size {len(data)})",
        offset=80,
    )


_FACET_DTYPE = np.dtype([("normal", "<f4", (3,)), ("verts", "<f4", (3, 3)), ("attr", "<u2")])


def _parse_binary(data, count):
    records = np.frombuffer(data, dtype=_FACET_DTYPE, count=count, offset=84)
    return records["verts"].astype(np.float64)


def _parse_ascii(data):
    facets = []
    current = None
    offset = 0
    state = "solid"
    for line in data.split(b"\n"):
        tokens = line.split()
        start = offset
        offset += len(line) + 1
        if not tokens:
            continue
        word = tokens[0]
        if state == "solid":
            if word != b"solid":
                raise STLParseError("expected 'solid'", offset=start)
            state = "facet"
        elif state == "facet":
            if word == b"endsolid":
                state = "done"
            elif word == b"facet":
                if tokens[1:2] != [b"normal"] or len(tokens) != 5:
                    raise STLParseError("malformed 'facet normal' line", offset=start)
                current = []
                state = "loop"
            else:
                raise STLParseError(f"unexpected token {word!r}", offset=start)
        elif state == "loop":
            if line.split() != [b"outer", b"loop"]:
                raise STLParseError("expected 'outer loop'", offset=start)
            state = "vertex"
        elif state == "vertex":
            if word == b"vertex":
                if len(tokens) != 4:
                    raise STLParseError("vertex line needs three coordinates", offset=start)
                try:
                    current.append([float(t) for t in tokens[1:]])
                except ValueError:
                    raise STLParseError("unparseable vertex coordinate", offset=start)
                if len(current) > 3:
                    raise STLParseError("more than three vertices in facet", offset=start)
            elif word == b"endloop":
                if len(current) != 3:
                    raise STLParseError("facet loop has fewer than three vertices", offset=start)
                state = "endfacet"
            else:
                raise STLParseError(f"unexpected token {word!r}", offset=start)
        elif state == "endfacet":
            if word != b"endfacet":
                raise STLParseError("expected 'endfacet'", offset=start)
            facets.append(current)
            current = None
            state = "facet"
        elif state == "done":
            raise STLParseError("content after 'endsolid'", offset=start)
    if state != "done":
        raise STLParseError("missing 'endsolid'", offset=len(data))
    return np.asarray(facets, dtype=np.float64).reshape(-1, 3, 3)


def _from_facets(facets):
    """Weld facet soup into an indexed mesh at exact coordinate equality."""
    index = {}
    vertices = []
    triangles = np.empty((len(facets), 3), dtype=np.int64)
    for i, facet in enumerate(facets):
        for j in range(3):
            key = (facet[j, 0], facet[j, 1], facet[j, 2])
            k = index.get(key)
            if k is None:
                k = len(vertices)
                index[key] = k
                vertices.append(key)
            triangles[i, j] = k
    verts = np.asarray(vertices, dtype=np.float64).reshape(-1, 3)
    degenerate = (
        (triangles[:, 0] == triangles[:, 1])
        | (triangles[:, 1] == triangles[:, 2])
        | (triangles[:, 0] == triangles[:, 2])
    )
    if degenerate.any():
        triangles = triangles[~degenerate]
    return TriMesh(verts, triangles, closed=_is_watertight(triangles))


def write_stl(mesh, path, binary=True):
    """Write the mesh; binary files round-trip coordinates exactly at
    float32 precision, ASCII at ~9 significant digits."""
    corners = mesh.corners()
    normals = mesh.area_vectors()
    lengths = np.linalg.norm(normals, axis=1)
    safe = np.where(lengths > 0.0, lengths, 1.0)
    normals = normals / safe[:, None]

    if binary:
        with open(path, "wb") as fh:
            fh.write(_BINARY_HEADER)
            fh.write(struct.pack("<I", mesh.n_triangles))
            for i in range(mesh.n_triangles):
                vals = np.concatenate([normals[i], corners[i].ravel()]).astype("<f4")
                fh.write(vals.tobytes())
                fh.write(struct.pack("<H", 0))
    else:
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write("solid hullspace\n")
            for i in range(mesh.n_triangles):
                n = normals[i]
                fh.write(f"  facet normal {n[0]:.9e} {n[1]:.9e} {n[2]:.9e}\n")
                fh.write("    outer loop\n")
                for v in corners[i]:
                    fh.write(f"      vertex {v[0]:.9e} {v[1]:.9e} {v[2]:.9e}\n")
                fh.write("    endloop\n")
                fh.write("  endfacet\n")
            fh.write("endsolid hullspace\n")
