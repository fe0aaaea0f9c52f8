"""Hydrostatic equilibrium, ITTC-57 friction, Froude number.

Equilibrium is vertical-only: the hull is translated along Z until the
displaced water weight matches the prescribed weight. Trim/pitch balance
would need the full flow solver and is out of scope here.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import NumericalError, ValidationError
from .mesh import clip_below_plane_with_cap, signed_volume

#: Relative tolerance on displaced volume for the equilibrium search.
VOLUME_RTOL = 1e-8
_MAX_BISECT = 200


@dataclass(frozen=True)
class FlowConstants:
    """Water properties and reference length.

    Defaults are fresh water at 20 C and the 5.72 m model length commonly
    used for the DTMB 5415 benchmark hull.
    """

    rho: float = 998.0
    g: float = 9.81
    nu: float = 1.09e-6
    Lref: float = 5.72

    def __post_init__(self):
        for name in ("rho", "g", "nu", "Lref"):
            if not getattr(self, name) > 0.0:
                raise ValidationError(f"FlowConstants.{name} must be strictly positive")


@dataclass(frozen=True, eq=False)
class HydroState:
    """Result of the equilibrium search.

    sinkage: vertical translation (m) applied to the mesh so it floats at
        the Z=0 plane.
    wetted_area: hull skin area below the waterline, cap excluded.
    """

    sinkage: float
    submerged_volume: float
    wetted_area: float
    buoyancy_force: np.ndarray

    def __post_init__(self):
        if self.submerged_volume < 0.0 or self.wetted_area < 0.0:
            raise ValidationError("negative submerged volume or wetted area")
        force = np.asarray(self.buoyancy_force, dtype=float).reshape(3)
        if force[2] < 0.0:
            raise ValidationError("buoyancy must not point downward")
        force.flags.writeable = False
        object.__setattr__(self, "buoyancy_force", force)


def hydrostatic_equilibrium(mesh, weight, constants=FlowConstants()):
    """Find the vertical translation at which the hull displaces `weight`.

    Bisection on the sinkage until rho * submerged_volume matches the
    weight to VOLUME_RTOL. The waterplane is Z = 0.
    """
    if weight <= 0.0:
        raise ValidationError("weight must be positive")
    total = signed_volume(mesh)
    if total <= 0.0:
        raise ValidationError("mesh encloses no volume; check orientation")
    target = weight / constants.rho
    if target > total * (1.0 + 1e-12):
        raise ValidationError(
            f"weight {weight:.6g} kg exceeds maximum displacement "
            f"{constants.rho * total:.6g} kg; hull cannot float"
        )

    z_min = float(mesh.vertices[:, 2].min())
    z_max = float(mesh.vertices[:, 2].max())
    lo, hi = -z_max, -z_min  # V(lo) = total, V(hi) = 0, V decreasing in s

    def submerged(s):
        clipped, n_hull = clip_below_plane_with_cap(mesh.translated((0.0, 0.0, s)), 0.0)
        return signed_volume(clipped), clipped, n_hull

    v_lo, _, _ = submerged(lo)
    if v_lo < target * (1.0 - 1e-9):
        raise NumericalError("initial bisection interval does not bracket the target volume")

    s = lo
    volume, clipped, n_hull = v_lo, None, 0
    for _ in range(_MAX_BISECT):
        s = 0.5 * (lo + hi)
        volume, clipped, n_hull = submerged(s)
        if abs(volume - target) <= VOLUME_RTOL * target:
            break
        if volume > target:
            lo = s
        else:
            hi = s
    else:
        raise NumericalError(
            f"hydrostatic bisection did not reach tolerance; residual "
            f"{abs(volume - target) / target:.3e}"
        )

    wetted = float(np.sum(clipped.areas()[:n_hull]))
    buoyancy = np.array([0.0, 0.0, constants.rho * constants.g * volume])
    return HydroState(
        sinkage=s,
        submerged_volume=volume,
        wetted_area=wetted,
        buoyancy_force=buoyancy,
    )


def ittc57_cf(speed, constants=FlowConstants()):
    """ITTC-57 friction-line coefficient C_F = 0.075 / (log10 Re - 2)^2."""
    reynolds = speed * constants.Lref / constants.nu
    if reynolds <= 100.0:
        raise ValidationError(
            f"Reynolds number {reynolds:.4g} outside ITTC-57 domain (need Re > 100)"
        )
    return 0.075 / (np.log10(reynolds) - 2.0) ** 2


def viscous_drag(speed, wetted_area, constants=FlowConstants()):
    """Friction drag 0.5 * rho * C_F * S_wet * V^2 in Newtons."""
    return 0.5 * constants.rho * ittc57_cf(speed, constants) * wetted_area * speed**2


def froude(speed, constants=FlowConstants()):
    """Froude number V / sqrt(g * Lref)."""
    if speed < 0.0:
        raise ValidationError("speed must be non-negative")
    return speed / np.sqrt(constants.g * constants.Lref)
