import numpy as np
import pytest

from hullspace.geometry import barge, icosphere, unit_cube


@pytest.fixture(scope="session")
def cube():
    return unit_cube()


@pytest.fixture(scope="session")
def sphere():
    # 5120 triangles, radius 1, centered at the origin
    return icosphere(4)


@pytest.fixture(scope="session")
def hull():
    return barge()


def ridge_samples(seed, n=104, m=8, direction=None):
    """Uniform samples on [-1,1]^m with f = s^3 + s along the direction."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1.0, 1.0, (n, m))
    a = np.zeros(m)
    a[-1] = 1.0
    if direction is not None:
        a = np.asarray(direction, dtype=float)
        a = a / np.linalg.norm(a)
    s = x @ a
    return x, s**3 + s, a


def vector_angle(u, v):
    """Angle between the lines spanned by two vectors, radians."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    u = u / np.linalg.norm(u)
    v = v / np.linalg.norm(v)
    perp = u - (u @ v) * v
    return float(np.arctan2(np.linalg.norm(perp), abs(u @ v)))
