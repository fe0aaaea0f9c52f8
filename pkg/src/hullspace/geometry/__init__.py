from .hydrostatics import (
    FlowConstants,
    HydroState,
    froude,
    hydrostatic_equilibrium,
    ittc57_cf,
    viscous_drag,
)
from .mesh import (
    TriMesh,
    clip_below_plane,
    clip_below_plane_with_cap,
    is_watertight,
    pressure_force,
    signed_volume,
)
from .shapes import barge, box, icosphere, tetrahedron, unit_cube
from .stl import read_stl, write_stl

__all__ = [
    "FlowConstants",
    "HydroState",
    "TriMesh",
    "barge",
    "box",
    "clip_below_plane",
    "clip_below_plane_with_cap",
    "froude",
    "hydrostatic_equilibrium",
    "icosphere",
    "is_watertight",
    "ittc57_cf",
    "pressure_force",
    "read_stl",
    "signed_volume",
    "tetrahedron",
    "unit_cube",
    "viscous_drag",
    "write_stl",
]
