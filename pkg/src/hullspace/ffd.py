"""Trivariate Bernstein free-form deformation through a rotated box lattice.

A lattice of (L+1) x (M+1) x (N+1) control points sits on the regular grid
(l/L, m/M, n/N) of the unit reference cube. Physical points are pulled into
reference coordinates by the affine map psi, blended against the displaced
control points, and pushed back. Points outside the box are left exactly
where they are.

Control-point displacements are stored in lattice-local units (fractions of
the box edge lengths), so parameter values stay comparable across
differently sized boxes.
"""

import json
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import ValidationError

_MAX_DEGREE = 20  # binomials stay exactly representable well below this
_AXES = {"x": 0, "y": 1, "z": 2}


def bernstein(i, n, t):
    """Bernstein basis value C(n,i) * t^i * (1-t)^(n-i)."""
    if not 0 <= i <= n:
        raise ValidationError(f"bernstein index {i} outside 0..{n}")
    if n > _MAX_DEGREE:
        raise ValidationError(f"bernstein degree {n} above supported maximum {_MAX_DEGREE}")
    return math.comb(n, i) * t**i * (1.0 - t) ** (n - i)


def _basis_matrix(n, t):
    """All Bernstein values of degree n at points t, shape (len(t), n+1)."""
    t = np.asarray(t, dtype=float)
    out = np.empty(t.shape + (n + 1,))
    for i in range(n + 1):
        out[..., i] = math.comb(n, i) * t**i * (1.0 - t) ** (n - i)
    return out


@dataclass(frozen=True, eq=False)
class FFDLattice:
    """Rotated box of control points with local displacement parameters.

    origin: physical position of the reference corner (0,0,0).
    rotation: 3x3 proper rotation of the box axes.
    edge_lengths: box extents along the rotated axes, meters.
    degrees: Bernstein degrees (L, M, N); (L+1)(M+1)(N+1) control points.
    displacements: (L+1, M+1, N+1, 3) array, fractions of edge length.
    """

    origin: np.ndarray
    rotation: np.ndarray
    edge_lengths: np.ndarray
    degrees: tuple
    displacements: np.ndarray

    def __post_init__(self):
        origin = np.asarray(self.origin, dtype=float).reshape(3)
        rot = np.asarray(self.rotation, dtype=float).reshape(3, 3)
        lengths = np.asarray(self.edge_lengths, dtype=float).reshape(3)
        degrees = tuple(int(d) for d in self.degrees)
        if np.max(np.abs(rot.T @ rot - np.eye(3))) > 1e-12:
            raise ValidationError("lattice rotation is not orthogonal")
        if abs(np.linalg.det(rot) - 1.0) > 1e-12:
            raise ValidationError("lattice rotation must have determinant +1")
        if not np.all(lengths > 0.0):
            raise ValidationError("lattice edge lengths must be strictly positive")
        if len(degrees) != 3 or any(d < 1 for d in degrees):
            raise ValidationError("lattice needs three degrees >= 1")
        if any(d > _MAX_DEGREE for d in degrees):
            raise ValidationError(f"lattice degree above supported maximum {_MAX_DEGREE}")
        shape = tuple(d + 1 for d in degrees) + (3,)
        disp = np.asarray(self.displacements, dtype=float)
        if disp.shape != shape:
            raise ValidationError(f"displacement array must have shape {shape}, got {disp.shape}")
        for arr in (origin, rot, lengths, disp):
            arr.flags.writeable = False
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "edge_lengths", lengths)
        object.__setattr__(self, "degrees", degrees)
        object.__setattr__(self, "displacements", disp)

    @classmethod
    def identity(cls, origin, edge_lengths, degrees=(2, 2, 2), rotation=None):
        """Lattice with zero displacements (the identity deformation)."""
        if rotation is None:
            rotation = np.eye(3)
        shape = tuple(int(d) + 1 for d in degrees) + (3,)
        return cls(origin, rotation, edge_lengths, tuple(degrees), np.zeros(shape))

    def with_displacements(self, displacements):
        return FFDLattice(self.origin, self.rotation, self.edge_lengths, self.degrees, displacements)

    def control_grid(self):
        """Undisplaced control points in reference coordinates, shape
        (L+1, M+1, N+1, 3)."""
        L, M, N = self.degrees
        gl = np.arange(L + 1) / L
        gm = np.arange(M + 1) / M
        gn = np.arange(N + 1) / N
        return np.stack(np.meshgrid(gl, gm, gn, indexing="ij"), axis=-1)


def to_reference(lattice, points):
    """Map physical points into the unit reference cube of the box."""
    pts = np.asarray(points, dtype=float)
    local = (pts.reshape(-1, 3) - lattice.origin) @ lattice.rotation
    local /= lattice.edge_lengths
    return local.reshape(pts.shape)


def from_reference(lattice, points):
    """Inverse of to_reference."""
    pts = np.asarray(points, dtype=float)
    phys = (pts.reshape(-1, 3) * lattice.edge_lengths) @ lattice.rotation.T + lattice.origin
    return phys.reshape(pts.shape)


def deform_points(lattice, points):
    """Deform an (n, 3) array of points; rows outside the box untouched."""
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    if not lattice.displacements.any():
        return pts.copy()  # identity fast path keeps coordinates bitwise intact
    ref = to_reference(lattice, pts)
    inside = np.all((ref >= 0.0) & (ref <= 1.0), axis=1)  # closed box
    if not inside.any():
        return pts.copy()

    L, M, N = lattice.degrees
    control = lattice.control_grid() + lattice.displacements
    bl = _basis_matrix(L, ref[inside, 0])
    bm = _basis_matrix(M, ref[inside, 1])
    bn = _basis_matrix(N, ref[inside, 2])
    blended = np.einsum("pl,pm,pn,lmnk->pk", bl, bm, bn, control)

    out = pts.copy()
    out[inside] = from_reference(lattice, blended)
    return out


def deform_point(lattice, point):
    """Deform one 3-vector through the lattice."""
    return deform_points(lattice, np.asarray(point, dtype=float).reshape(1, 3))[0]


def deform_mesh(lattice, mesh):
    """Deform mesh vertices; connectivity and orientation are preserved."""
    if not lattice.displacements.any():
        return mesh
    return mesh.with_vertices(deform_points(lattice, mesh.vertices))


@dataclass(frozen=True)
class ParamBinding:
    """One scalar design parameter bound to a (l, m, n, axis) entry."""

    name: str
    index: tuple
    axis: int
    lower: float
    upper: float


@dataclass(frozen=True)
class LatticeProfile:
    """Lattice geometry plus named parameter bindings, loaded from JSON.

    mirror_axis: lattice axis across which bindings are mirrored to keep
    hull symmetry (displacement along that axis is negated on the mirror
    point, the other components are copied).
    """

    name: str
    origin: tuple
    rotation: np.ndarray
    lengths: tuple
    degrees: tuple
    bindings: tuple
    mirror_axis: int | None = None

    @property
    def parameter_names(self):
        return tuple(b.name for b in self.bindings)

    def base_lattice(self):
        return FFDLattice.identity(self.origin, self.lengths, self.degrees, self.rotation)


def _rotation_from_axis_angle(axis, angle_deg):
    axis = np.asarray(axis, dtype=float).reshape(3)
    norm = np.linalg.norm(axis)
    if norm == 0.0:
        raise ValidationError("rotation axis must be non-zero")
    axis = axis / norm
    th = math.radians(angle_deg)
    k = np.array(
        [[0.0, -axis[2], axis[1]], [axis[2], 0.0, -axis[0]], [-axis[1], axis[0], 0.0]]
    )
    return np.eye(3) + math.sin(th) * k + (1.0 - math.cos(th)) * (k @ k)


def load_profile(source):
    """Read a lattice profile from a JSON file path or parsed dict."""
    if isinstance(source, dict):
        raw = source
    else:
        with open(source, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    try:
        degrees = tuple(int(d) for d in raw["degrees"])
        bindings = tuple(
            ParamBinding(
                name=b["name"],
                index=tuple(int(i) for i in b["index"]),
                axis=_AXES[b["axis"]],
                lower=float(b["bounds"][0]),
                upper=float(b["bounds"][1]),
            )
            for b in raw["bindings"]
        )
        mirror = raw.get("mirror_axis")
        profile = LatticeProfile(
            name=raw.get("name", "unnamed"),
            origin=tuple(float(v) for v in raw["origin"]),
            rotation=_rotation_from_axis_angle(
                raw.get("rotation_axis", (0.0, 0.0, 1.0)),
                raw.get("rotation_angle_deg", 0.0),
            ),
            lengths=tuple(float(v) for v in raw["lengths"]),
            degrees=degrees,
            bindings=bindings,
            mirror_axis=None if mirror is None else _AXES[mirror],
        )
    except (KeyError, TypeError, IndexError) as exc:
        raise ValidationError(f"malformed lattice profile: {exc!r}") from exc
    for b in profile.bindings:
        if len(b.index) != 3 or any(not 0 <= b.index[k] <= degrees[k] for k in range(3)):
            raise ValidationError(f"binding {b.name} index {b.index} outside lattice")
        if not b.lower < b.upper:
            raise ValidationError(f"binding {b.name} has degenerate bounds")
    return profile


def default_profile():
    """The DTMB-style 2x2x2 side-wall profile shipped with the package."""
    text = resources.files("hullspace.data").joinpath("dtmb_lattice.json").read_text()
    return load_profile(json.loads(text))


@dataclass(frozen=True)
class GeoParams:
    """Values for the named geometric parameters of a lattice profile."""

    values: tuple
    profile: LatticeProfile = None

    def __post_init__(self):
        profile = self.profile if self.profile is not None else default_profile()
        values = tuple(float(v) for v in self.values)
        if len(values) != len(profile.bindings):
            raise ValidationError(
                f"expected {len(profile.bindings)} parameter values, got {len(values)}"
            )
        for value, binding in zip(values, profile.bindings):
            if not binding.lower <= value <= binding.upper:
                raise ValidationError(
                    f"parameter {binding.name}={value} outside bounds "
                    f"[{binding.lower}, {binding.upper}]"
                )
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "profile", profile)


def hull_lattice(params):
    """Build the symmetric hull deformation lattice from parameter values.

    Each bound control point receives its displacement; the point mirrored
    across the profile's symmetry axis receives the same displacement with
    the mirror-axis component negated, so a symmetric hull stays symmetric.
    """
    profile = params.profile
    lattice = profile.base_lattice()
    disp = np.array(lattice.displacements)
    for value, binding in zip(params.values, profile.bindings):
        l, m, n = binding.index
        disp[l, m, n, binding.axis] += value
        if profile.mirror_axis is not None:
            mirrored = [l, m, n]
            mirrored[profile.mirror_axis] = profile.degrees[profile.mirror_axis] - mirrored[profile.mirror_axis]
            if tuple(mirrored) != (l, m, n):
                sign = -1.0 if binding.axis == profile.mirror_axis else 1.0
                disp[mirrored[0], mirrored[1], mirrored[2], binding.axis] += sign * value
    return lattice.with_displacements(disp)
