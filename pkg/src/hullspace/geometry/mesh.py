"""Indexed triangle surface meshes and the integrals hydrostatics needs.

Meshes are immutable value types (arrays are frozen), so they are safe to
share between threads. All reductions go through numpy sums, whose pairwise
accumulation order is fixed, keeping results deterministic.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import NumericalError, ValidationError


@dataclass(frozen=True, eq=False)
class TriMesh:
    """Triangle surface mesh with counter-clockwise (outward) orientation.

    vertices: (n, 3) float array, meters.
    triangles: (t, 3) int array of vertex indices.
    closed: set when every edge is shared by exactly two triangles with
        opposite traversal direction; validated at construction.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    closed: bool = False

    def __post_init__(self):
        verts = np.ascontiguousarray(np.asarray(self.vertices, dtype=float)).reshape(-1, 3)
        tris = np.ascontiguousarray(np.asarray(self.triangles, dtype=np.int64)).reshape(-1, 3)
        if not np.all(np.isfinite(verts)):
            raise ValidationError("mesh vertices contain non-finite coordinates")
        if tris.size:
            if tris.min() < 0 or tris.max() >= len(verts):
                raise ValidationError("triangle index out of range")
            degenerate = (
                (tris[:, 0] == tris[:, 1])
                | (tris[:, 1] == tris[:, 2])
                | (tris[:, 0] == tris[:, 2])
            )
            if degenerate.any():
                raise ValidationError(
                    f"triangle {int(np.nonzero(degenerate)[0][0])} repeats a vertex index"
                )
        verts.flags.writeable = False
        tris.flags.writeable = False
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "triangles", tris)
        if self.closed and not _is_watertight(tris):
            raise ValidationError("mesh flagged closed but edges are not two-manifold")

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    def corners(self):
        """Vertex coordinates per triangle, shape (t, 3, 3)."""
        return self.vertices[self.triangles]

    def area_vectors(self):
        """Per-triangle normal scaled by area, shape (t, 3)."""
        c = self.corners()
        return 0.5 * np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0])

    def areas(self):
        return np.linalg.norm(self.area_vectors(), axis=1)

    def centroids(self):
        return self.corners().mean(axis=1)

    def surface_area(self):
        return float(np.sum(self.areas()))

    def translated(self, offset):
        offset = np.asarray(offset, dtype=float).reshape(3)
        return TriMesh(self.vertices + offset, self.triangles, closed=self.closed)

    def transformed(self, rotation, offset=(0.0, 0.0, 0.0)):
        """Rigidly move the mesh: x -> rotation @ x + offset."""
        rotation = np.asarray(rotation, dtype=float).reshape(3, 3)
        offset = np.asarray(offset, dtype=float).reshape(3)
        return TriMesh(self.vertices @ rotation.T + offset, self.triangles, closed=self.closed)

    def with_vertices(self, vertices):
        """Same connectivity, new vertex positions."""
        return TriMesh(vertices, self.triangles, closed=self.closed)

    def flipped(self):
        """Reverse orientation (normals negated), e.g. to view a hull
        surface as the boundary of the surrounding water."""
        return TriMesh(self.vertices, self.triangles[:, [0, 2, 1]], closed=self.closed)


def _directed_edges(triangles):
    """All directed edges (a, b), three per triangle, shape (3t, 2)."""
    return np.concatenate(
        [triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]], axis=0
    )


def _is_watertight(triangles):
    """True when every edge appears exactly once per direction."""
    if len(triangles) == 0:
        return True
    edges = _directed_edges(triangles)
    # Unique directed edges: no edge may be traversed twice the same way.
    keys = edges[:, 0].astype(np.int64) * (triangles.max() + 1) + edges[:, 1]
    if len(np.unique(keys)) != len(keys):
        return False
    # Every directed edge must have its reverse present.
    rev = edges[:, 1].astype(np.int64) * (triangles.max() + 1) + edges[:, 0]
    return bool(np.all(np.isin(keys, rev)))


def is_watertight(mesh):
    """Every edge shared by exactly two triangles, opposite traversal."""
    return _is_watertight(mesh.triangles)


def signed_volume(mesh):
    """Volume enclosed by a closed mesh via the divergence theorem.

    Sum over triangles of v0 . (v1 x v2) / 6; positive for outward
    orientation.
    """
    if not mesh.closed:
        raise ValidationError("signed_volume requires a mesh flagged closed")
    c = mesh.corners()
    contrib = np.einsum("ij,ij->i", c[:, 0], np.cross(c[:, 1], c[:, 2]))
    return float(np.sum(contrib)) / 6.0


def pressure_force(mesh, pressure):
    """Integral of p n dA over the mesh, one pressure sample per centroid.

    pressure: callable taking a 3-vector centroid, returning a scalar.
    Uses the mesh's own normal orientation; flip the mesh to integrate
    over the other side of the surface (a hull skin oriented as the water
    boundary yields the force the fluid exerts, e.g. buoyancy upward).
    The X component is the resistance contribution.
    """
    centroids = mesh.centroids()
    values = np.empty(len(centroids))
    for i, c in enumerate(centroids):
        values[i] = pressure(c)
        if not np.isfinite(values[i]):
            raise ValidationError(f"pressure non-finite at triangle {i}")
    return np.sum(values[:, None] * mesh.area_vectors(), axis=0)


def clip_below_plane(mesh, z):
    """Watertight mesh of the region Z <= z.

    Triangles fully below are kept, straddling triangles are split at the
    plane, and the waterplane opening is capped. Returns an empty mesh if
    the input lies entirely above the plane.
    """
    clipped, _ = clip_below_plane_with_cap(mesh, z)
    return clipped


def clip_below_plane_with_cap(mesh, z):
    """Like clip_below_plane, also reporting how many triangles are hull
    skin (the remaining ones are the waterplane cap)."""
    if not mesh.closed:
        raise ValidationError("clip_below_plane requires a closed mesh")
    d = mesh.vertices[:, 2] - z
    below = d <= 0.0  # points on the plane count as kept

    tri_below = below[mesh.triangles]
    n_below = tri_below.sum(axis=1)

    if len(mesh.triangles) == 0 or n_below.max(initial=0) == 0:
        return TriMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64), closed=True), 0
    if n_below.min() == 3:
        return mesh, mesh.n_triangles

    extra = []
    cut_cache = {}

    def cut_point(i, j):
        # Canonical edge order makes both adjacent triangles reuse the
        # exact same intersection vertex, so the result stays welded.
        key = (i, j) if i < j else (j, i)
        idx = cut_cache.get(key)
        if idx is None:
            a, b = key
            t = d[a] / (d[a] - d[b])
            p = mesh.vertices[a] + t * (mesh.vertices[b] - mesh.vertices[a])
            extra.append((p[0], p[1], z))  # pin the cap exactly onto the plane
            idx = mesh.n_vertices + len(extra) - 1
            cut_cache[key] = idx
        return idx

    new_tris = list(map(tuple, mesh.triangles[n_below == 3]))
    for tri in mesh.triangles[(n_below == 1) | (n_below == 2)]:
        poly = []
        for e in range(3):
            i, j = tri[e], tri[(e + 1) % 3]
            if d[i] <= 0.0:
                poly.append(int(i))
            if d[i] * d[j] < 0.0:  # strict sign change; on-plane ends need no cut
                poly.append(cut_point(int(i), int(j)))
        for e in range(1, len(poly) - 1):
            new_tris.append((poly[0], poly[e], poly[e + 1]))

    verts = mesh.vertices
    if extra:
        verts = np.concatenate([verts, np.asarray(extra)], axis=0)
    tris = np.asarray(new_tris, dtype=np.int64).reshape(-1, 3)
    n_hull = len(tris)
    cap = _cap_boundary(verts, tris)
    if cap:
        tris = np.concatenate([tris, np.asarray(cap, dtype=np.int64)], axis=0)

    # Drop vertices no longer referenced and reindex.
    used = np.unique(tris)
    remap = np.full(len(verts), -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    clipped = TriMesh(verts[used], remap[tris], closed=True)
    return clipped, n_hull


def _cap_boundary(verts, tris):
    """Triangulate the open boundary loops of a clipped mesh.

    Boundary edges are the directed edges without a reverse partner; each
    cap triangle traverses them in the opposite direction, which keeps the
    result watertight and the cap normals outward.
    """
    if len(tris) == 0:
        return []
    edges = _directed_edges(tris)
    n = int(edges.max()) + 1
    keys = edges[:, 0] * n + edges[:, 1]
    rev = edges[:, 1] * n + edges[:, 0]
    boundary = edges[~np.isin(keys, rev)]
    if len(boundary) == 0:
        return []

    # Reverse, then chain b -> a links into closed loops.
    succ = {}
    for a, b in boundary:
        if int(b) in succ:
            raise NumericalError("non-manifold waterline; cannot cap clip boundary")
        succ[int(b)] = int(a)
    cap = []
    while succ:
        start, nxt = next(iter(succ.items()))
        loop = [start]
        while True:
            nxt = succ.pop(loop[-1])
            if nxt == start:
                break
            loop.append(nxt)
        cap.extend(_ear_clip(verts, loop))
    return cap


def _ear_clip(verts, loop):
    """Triangulate one planar polygon (indices into verts), keeping the
    loop's traversal order so shared edges stay opposed."""
    if len(loop) < 3:
        return []
    xy = verts[loop][:, :2]
    # Orientation sign from the polygon's own signed area.
    area2 = np.sum(xy[:, 0] * np.roll(xy[:, 1], -1) - np.roll(xy[:, 0], -1) * xy[:, 1])
    sign = 1.0 if area2 >= 0.0 else -1.0

    crosses = sign * _corner_crosses(xy)
    if np.all(crosses >= -1e-12 * max(1.0, np.abs(crosses).max())):
        # Convex polygon (the usual waterline case): fan from vertex 0.
        return [(loop[0], loop[k], loop[k + 1]) for k in range(1, len(loop) - 1)]

    idx = list(range(len(loop)))
    tris = []
    while len(idx) > 3:
        best, best_cross = None, -np.inf
        for k in range(len(idx)):
            a, b, c = idx[k - 1], idx[k], idx[(k + 1) % len(idx)]
            u, v = xy[b] - xy[a], xy[c] - xy[b]
            cross = sign * (u[0] * v[1] - u[1] * v[0])
            if cross <= 0.0:
                continue
            others = xy[[j for j in idx if j not in (a, b, c)]]
            if _points_in_triangle(others, xy[a], xy[b], xy[c]):
                continue
            best = k
            break
        if best is None:
            # Numerically degenerate loop: clip the flattest corner anyway.
            best = int(
                np.argmax(
                    [
                        abs(np.cross(xy[idx[k]] - xy[idx[k - 1]], xy[idx[(k + 1) % len(idx)]] - xy[idx[k]]))
                        for k in range(len(idx))
                    ]
                )
            )
        a, b, c = idx[best - 1], idx[best], idx[(best + 1) % len(idx)]
        tris.append((loop[a], loop[b], loop[c]))
        del idx[best]
    a, b, c = idx
    tris.append((loop[a], loop[b], loop[c]))
    return tris


def _corner_crosses(xy):
    """Cross product at each polygon corner, vectorized."""
    prev = np.roll(xy, 1, axis=0)
    nxt = np.roll(xy, -1, axis=0)
    u = xy - prev
    v = nxt - xy
    return u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]


def _points_in_triangle(points, pa, pb, pc):
    """True if any of the points lies strictly inside triangle (pa,pb,pc)."""
    if len(points) == 0:
        return False
    det = (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1])
    if det == 0.0:
        return False
    dx = points[:, 0] - pa[0]
    dy = points[:, 1] - pa[1]
    w1 = (dx * (pc[1] - pa[1]) - (pc[0] - pa[0]) * dy) / det
    w2 = ((pb[0] - pa[0]) * dy - dx * (pb[1] - pa[1])) / det
    return bool(np.any((w1 > 1e-12) & (w2 > 1e-12) & (1.0 - w1 - w2 > 1e-12)))
