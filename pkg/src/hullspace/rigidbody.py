"""Quaternion-based rigid-body state and explicit time stepping.

The orientation is carried as a unit quaternion and renormalized after
every step, which keeps the reconstructed rotation matrix orthogonal to
machine precision. evolve_rotation_matrix integrates the rotation matrix
directly, without re-orthogonalization, to expose the drift that makes the
quaternion representation preferable.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ValidationError


@dataclass(frozen=True, eq=False)
class Quaternion:
    """Quaternion [s, v] with scalar part s and vector part v."""

    s: float
    v: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.v, dtype=float).reshape(3)
        v.flags.writeable = False
        object.__setattr__(self, "s", float(self.s))
        object.__setattr__(self, "v", v)

    @classmethod
    def identity(cls):
        return cls(1.0, np.zeros(3))

    @classmethod
    def from_axis_angle(cls, axis, angle):
        axis = np.asarray(axis, dtype=float).reshape(3)
        norm = np.linalg.norm(axis)
        if norm == 0.0:
            raise ValidationError("rotation axis must be non-zero")
        half = 0.5 * angle
        return cls(np.cos(half), np.sin(half) * axis / norm)

    def norm(self):
        return float(np.sqrt(self.s**2 + np.dot(self.v, self.v)))

    def normalized(self):
        n = self.norm()
        if n == 0.0:
            raise ValidationError("cannot normalize the zero quaternion")
        return Quaternion(self.s / n, self.v / n)

    def as_array(self):
        return np.concatenate([[self.s], self.v])


def quat_mul(q1, q2):
    """Hamilton product [s1 s2 - v1.v2, s1 v2 + s2 v1 + v1 x v2]."""
    s = q1.s * q2.s - np.dot(q1.v, q2.v)
    v = q1.s * q2.v + q2.s * q1.v + np.cross(q1.v, q2.v)
    return Quaternion(s, v)


def quat_to_rotation(q):
    """Rotation matrix of a unit quaternion (renormalized internally)."""
    q = q.normalized()
    s, (x, y, z) = q.s, q.v
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - s * z), 2 * (x * z + s * y)],
            [2 * (x * y + s * z), 1 - 2 * (x * x + z * z), 2 * (y * z - s * x)],
            [2 * (x * z - s * y), 2 * (y * z + s * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def skew(omega):
    """Matrix form of the cross product: skew(w) @ u == w x u."""
    wx, wy, wz = np.asarray(omega, dtype=float).reshape(3)
    return np.array([[0.0, -wz, wy], [wz, 0.0, -wx], [-wy, wx, 0.0]])


@dataclass(frozen=True, eq=False)
class RigidState:
    """Center-of-gravity position/velocity, orientation, angular velocity
    (global frame)."""

    position: np.ndarray
    velocity: np.ndarray
    orientation: Quaternion
    omega: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.position, dtype=float).reshape(3)
        vel = np.asarray(self.velocity, dtype=float).reshape(3)
        omg = np.asarray(self.omega, dtype=float).reshape(3)
        if abs(self.orientation.norm() - 1.0) > 1e-9:
            raise ValidationError("orientation quaternion must be unit length")
        for arr in (pos, vel, omg):
            arr.flags.writeable = False
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "velocity", vel)
        object.__setattr__(self, "omega", omg)

    @classmethod
    def at_rest(cls):
        return cls(np.zeros(3), np.zeros(3), Quaternion.identity(), np.zeros(3))


@dataclass(frozen=True, eq=False)
class BodyProps:
    """Mass, body-frame inertia tensor, and the gravity vector."""

    mass: float
    inertia: np.ndarray
    gravity: np.ndarray = (0.0, 0.0, -9.81)

    def __post_init__(self):
        if not self.mass > 0.0:
            raise ValidationError("mass must be strictly positive")
        inertia = np.asarray(self.inertia, dtype=float).reshape(3, 3)
        gravity = np.asarray(self.gravity, dtype=float).reshape(3)
        if np.max(np.abs(inertia - inertia.T)) > 1e-12:
            raise ValidationError("inertia tensor must be symmetric")
        if np.any(np.linalg.eigvalsh(inertia) <= 0.0):
            raise ValidationError("inertia tensor must be positive-definite")
        inertia.flags.writeable = False
        gravity.flags.writeable = False
        object.__setattr__(self, "inertia", inertia)
        object.__setattr__(self, "gravity", gravity)


def world_inertia(state, props):
    """Inertia tensor rotated into the global frame: R I R^T."""
    rot = quat_to_rotation(state.orientation)
    return rot @ props.inertia @ rot.T


def kinetic_energy(state, props):
    """Rotational kinetic energy 0.5 w^T (R I R^T) w."""
    return 0.5 * float(state.omega @ world_inertia(state, props) @ state.omega)


def angular_momentum(state, props):
    """Global-frame angular momentum (R I R^T) w."""
    return world_inertia(state, props) @ state.omega


def _pack(state):
    return np.concatenate(
        [state.position, state.velocity, state.orientation.as_array(), state.omega]
    )


def _unpack(y):
    q = Quaternion(y[6], y[7:10]).normalized()
    return RigidState(y[0:3], y[3:6], q, y[10:13])


def _derivative(y, t, props, force_fn, moment_fn):
    state = _unpack(y)
    rot = quat_to_rotation(state.orientation)
    inertia_w = rot @ props.inertia @ rot.T
    force = np.asarray(force_fn(t, state), dtype=float).reshape(3)
    moment = np.asarray(moment_fn(t, state), dtype=float).reshape(3)
    try:
        omega_dot = np.linalg.solve(
            inertia_w, moment - np.cross(state.omega, inertia_w @ state.omega)
        )
    except np.linalg.LinAlgError as exc:
        raise NumericalError("world-frame inertia is numerically singular") from exc
    q = Quaternion(y[6], y[7:10])
    q_dot = quat_mul(Quaternion(0.0, state.omega), q)
    dy = np.empty(13)
    dy[0:3] = y[3:6]
    dy[3:6] = props.gravity + force / props.mass
    dy[6] = 0.5 * q_dot.s
    dy[7:10] = 0.5 * q_dot.v
    dy[10:13] = omega_dot
    return dy


def step(state, props, force_fn, moment_fn, t, dt, renormalize=True):
    """Advance one classical fourth-order Runge-Kutta step of size dt.

    force_fn / moment_fn are pure callables of (time, RigidState) giving
    the non-gravity force and the moment about the center of gravity. The
    quaternion is renormalized after the step unless renormalize=False
    (used to measure the raw norm drift).
    """
    if dt <= 0.0:
        raise ValidationError("dt must be positive")
    y = _pack(state)
    k1 = _derivative(y, t, props, force_fn, moment_fn)
    k2 = _derivative(y + 0.5 * dt * k1, t + 0.5 * dt, props, force_fn, moment_fn)
    k3 = _derivative(y + 0.5 * dt * k2, t + 0.5 * dt, props, force_fn, moment_fn)
    k4 = _derivative(y + dt * k3, t + dt, props, force_fn, moment_fn)
    y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    q = Quaternion(y[6], y[7:10])
    if renormalize:
        q = q.normalized()
    return RigidState(y[0:3], y[3:6], q, y[10:13])


def evolve_rotation_matrix(rotation, omega, dt):
    """One explicit Euler step of Rdot = skew(w) R, no re-orthogonalization.

    Feeding the result back accumulates orthogonality drift; that loss is
    the reason orientation is integrated with quaternions instead.
    """
    rotation = np.asarray(rotation, dtype=float).reshape(3, 3)
    return rotation + dt * skew(omega) @ rotation


def simulate(state, props, force_fn, moment_fn, t0, dt, n_steps):
    """Step n_steps times; returns the list [(t0, s0), ..., (tN, sN)]."""
    records = [(t0, state)]
    t = t0
    for _ in range(n_steps):
        state = step(state, props, force_fn, moment_fn, t, dt)
        t += dt
        records.append((t, state))
    return records


def save_trajectory(path, records, stride=1):
    """Write (t, state) records as CSV: t, position, quaternion, omega."""
    if stride < 1:
        raise ValidationError("stride must be >= 1")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "x", "y", "z", "q_s", "q_x", "q_y", "q_z", "w_x", "w_y", "w_z"])
        for t, state in records[::stride]:
            row = [t, *state.position, state.orientation.s, *state.orientation.v, *state.omega]
            writer.writerow([f"{v:.17g}" for v in row])
