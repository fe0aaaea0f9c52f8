"""Closed reference meshes: boxes, tetrahedra, icospheres, a barge hull."""

import numpy as np

from .mesh import TriMesh

_CUBE_TRIS = np.array(
    [
        [0, 2, 1], [0, 3, 2],  # z = 0, normal -z
        [4, 5, 6], [4, 6, 7],  # z = 1, normal +z
        [0, 1, 5], [0, 5, 4],  # y = 0
        [2, 3, 7], [2, 7, 6],  # y = 1
        [0, 4, 7], [0, 7, 3],  # x = 0
        [1, 2, 6], [1, 6, 5],  # x = 1
    ],
    dtype=np.int64,
)


def unit_cube():
    """Cube on [0, 1]^3, 12 outward-oriented triangles."""
    verts = np.array(
        [
            [0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0],
            [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1],
        ],
        dtype=float,
    )
    return TriMesh(verts, _CUBE_TRIS, closed=True)


def box(lengths, center=(0.0, 0.0, 0.0)):
    """Axis-aligned closed box with given edge lengths and center."""
    lengths = np.asarray(lengths, dtype=float).reshape(3)
    center = np.asarray(center, dtype=float).reshape(3)
    cube = unit_cube()
    verts = (cube.vertices - 0.5) * lengths + center
    return TriMesh(verts, cube.triangles, closed=True)


def tetrahedron():
    """Unit corner tetrahedron O-(1,0,0)-(0,1,0)-(0,0,1); volume 1/6."""
    verts = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=float)
    tris = np.array([[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]], dtype=np.int64)
    return TriMesh(verts, tris, closed=True)


def icosphere(subdivisions=4, radius=1.0, center=(0.0, 0.0, 0.0)):
    """Sphere mesh from a subdivided icosahedron; 20 * 4**subdivisions
    triangles (5120 at 4 subdivisions)."""
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array(
        [
            [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
            [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
            [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
        ],
        dtype=float,
    )
    verts /= np.linalg.norm(verts[0])
    tris = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    verts = list(map(tuple, verts))
    for _ in range(subdivisions):
        midpoint = {}

        def midpoint_index(a, b):
            key = (a, b) if a < b else (b, a)
            idx = midpoint.get(key)
            if idx is None:
                p = np.asarray(verts[a]) + np.asarray(verts[b])
                p /= np.linalg.norm(p)
                verts.append(tuple(p))
                idx = len(verts) - 1
                midpoint[key] = idx
            return idx

        nxt = []
        for a, b, c in tris:
            ab, bc, ca = midpoint_index(a, b), midpoint_index(b, c), midpoint_index(c, a)
            nxt += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        tris = nxt

    points = np.asarray(verts) * radius + np.asarray(center, dtype=float)
    return TriMesh(points, np.asarray(tris, dtype=np.int64), closed=True)


def barge(length=5.72, beam=0.76, depth=0.45, deck_z=0.1):
    """Rectangular barge hull used as the desk-scale stand-in geometry.

    The deck sits at deck_z so the undeformed hull pierces the Z=0
    waterplane like a floating body.
    """
    return box((length, beam, depth), center=(length / 2.0, 0.0, deck_z - depth / 2.0))
