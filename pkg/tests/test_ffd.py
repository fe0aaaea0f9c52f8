import math

import numpy as np
import pytest

from hullspace import ffd
from hullspace.errors import ValidationError
from hullspace.geometry import icosphere, signed_volume


def brute_force_deform(lattice, point):
    """Direct triple-sum evaluation of the lattice blend, written plainly."""
    y = (np.asarray(point) - lattice.origin) @ lattice.rotation / lattice.edge_lengths
    L, M, N = lattice.degrees
    acc = np.zeros(3)
    for l in range(L + 1):
        bl = math.comb(L, l) * y[0] ** l * (1 - y[0]) ** (L - l)
        for m in range(M + 1):
            bm = math.comb(M, m) * y[1] ** m * (1 - y[1]) ** (M - m)
            for n in range(N + 1):
                bn = math.comb(N, n) * y[2] ** n * (1 - y[2]) ** (N - n)
                control = np.array([l / L, m / M, n / N]) + lattice.displacements[l, m, n]
                acc += bl * bm * bn * control
    return lattice.origin + (acc * lattice.edge_lengths) @ lattice.rotation.T


class TestBernstein:
    def test_quadratic_at_half(self):
        assert ffd.bernstein(0, 2, 0.5) == pytest.approx(0.25)

    @pytest.mark.parametrize("t", [0.0, 0.3, 1.0])
    def test_linear_case(self, t):
        assert ffd.bernstein(1, 1, t) == pytest.approx(t)

    def test_partition_of_unity(self):
        total = sum(ffd.bernstein(i, 3, 0.7) for i in range(4))
        assert total == pytest.approx(1.0, abs=1e-15)

    def test_index_above_degree_rejected(self):
        with pytest.raises(ValidationError):
            ffd.bernstein(3, 2, 0.5)

    def test_degree_cap(self):
        with pytest.raises(ValidationError):
            ffd.bernstein(0, 21, 0.5)


class TestReferenceMap:
    def test_origin_maps_to_zero(self):
        lat = ffd.FFDLattice.identity((1.0, -2.0, 0.5), (2.0, 3.0, 4.0))
        assert ffd.to_reference(lat, np.array([1.0, -2.0, 0.5])) == pytest.approx([0, 0, 0])

    def test_identity_box(self):
        lat = ffd.FFDLattice.identity((0, 0, 0), (1, 1, 1))
        x = np.array([0.3, 0.5, 0.9])
        assert ffd.to_reference(lat, x) == pytest.approx(x)

    def test_rotated_box(self):
        rot = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])  # +90 deg about Z
        lat = ffd.FFDLattice.identity((0, 0, 0), (1, 1, 1), rotation=rot)
        y = ffd.to_reference(lat, np.array([0.0, 1.0, 0.0]))
        assert y == pytest.approx([1.0, 0.0, 0.0], abs=1e-12)

    def test_round_trip(self):
        rng = np.random.default_rng(2)
        rot = ffd._rotation_from_axis_angle((1.0, 2.0, -0.5), 37.0)
        lat = ffd.FFDLattice.identity((0.4, 1.0, -2.0), (2.0, 0.5, 3.0), rotation=rot)
        pts = rng.normal(size=(50, 3))
        back = ffd.from_reference(lat, ffd.to_reference(lat, pts))
        assert np.max(np.abs(back - pts)) < 1e-12


class TestLatticeValidation:
    def test_non_orthogonal_rotation(self):
        bad = np.eye(3)
        bad[0, 1] = 1e-6
        with pytest.raises(ValidationError):
            ffd.FFDLattice.identity((0, 0, 0), (1, 1, 1), rotation=bad)

    def test_reflection_rejected(self):
        with pytest.raises(ValidationError):
            ffd.FFDLattice.identity((0, 0, 0), (1, 1, 1), rotation=np.diag([1.0, 1.0, -1.0]))

    def test_negative_lengths(self):
        with pytest.raises(ValidationError):
            ffd.FFDLattice.identity((0, 0, 0), (1, 0, 1))

    def test_displacement_shape(self):
        with pytest.raises(ValidationError):
            ffd.FFDLattice((0, 0, 0), np.eye(3), (1, 1, 1), (2, 2, 2), np.zeros((2, 2, 2, 3)))


class TestDeformPoint:
    def test_zero_displacement_is_identity(self):
        lat = ffd.FFDLattice.identity((0, 0, 0), (1, 1, 1))
        rng = np.random.default_rng(0)
        pts = rng.uniform(-0.5, 1.5, size=(200, 3))
        assert np.array_equal(ffd.deform_points(lat, pts), pts)

    def test_corner_weight(self):
        disp = np.zeros((3, 3, 3, 3))
        disp[0, 0, 0, 0] = 0.1
        lat = ffd.FFDLattice.identity((0, 0, 0), (2.0, 1.0, 1.0)).with_displacements(disp)
        # all Bernstein weight sits on the displaced corner; x units scale by edge length
        moved = ffd.deform_point(lat, np.zeros(3))
        assert moved == pytest.approx([0.2, 0.0, 0.0], abs=1e-15)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(7)
        rot = ffd._rotation_from_axis_angle((0.3, -1.0, 0.8), 21.0)
        lat = ffd.FFDLattice.identity((0.2, -0.1, 0.3), (1.5, 0.8, 2.0), rotation=rot)
        lat = lat.with_displacements(rng.normal(0.0, 0.05, (3, 3, 3, 3)))
        for point in ffd.from_reference(lat, rng.uniform(0, 1, (20, 3))):
            expected = brute_force_deform(lat, point)
            assert np.max(np.abs(ffd.deform_point(lat, point) - expected)) < 1e-13

    def test_outside_box_fixed(self):
        disp = np.full((3, 3, 3, 3), 0.2)
        lat = ffd.FFDLattice.identity((0, 0, 0), (1, 1, 1)).with_displacements(disp)
        outside = np.array([2.0, 0.5, 0.5])
        assert np.array_equal(ffd.deform_point(lat, outside), outside)

    def test_affine_precision(self):
        # control points moved onto an affine image of the regular grid
        rng = np.random.default_rng(11)
        amat = np.eye(3) + 0.1 * rng.normal(size=(3, 3))
        bvec = rng.normal(size=3) * 0.1
        lat = ffd.FFDLattice.identity((0, 0, 0), (1, 1, 1))
        grid = lat.control_grid()
        lat = lat.with_displacements(grid @ amat.T + bvec - grid)
        pts = rng.uniform(0, 1, (1000, 3))
        expected = pts @ amat.T + bvec
        assert np.max(np.abs(ffd.deform_points(lat, pts) - expected)) < 1e-10

    def test_derivative_matches_basis(self):
        # d(deform)/d(displacement entry), in reference coordinates, is the
        # Bernstein weight of that control point
        lat0 = ffd.FFDLattice.identity((0, 0, 0), (1, 1, 1))
        point = np.array([0.37, 0.61, 0.15])
        h = 1e-5
        for index in [(0, 0, 0), (1, 2, 1), (2, 2, 2)]:
            for axis in range(3):
                dplus = np.zeros((3, 3, 3, 3))
                dplus[index + (axis,)] = h
                plus = ffd.to_reference(lat0, ffd.deform_point(lat0.with_displacements(dplus), point))
                minus = ffd.to_reference(lat0, ffd.deform_point(lat0.with_displacements(-dplus), point))
                fd = (plus - minus) / (2 * h)
                weight = (
                    ffd.bernstein(index[0], 2, point[0])
                    * ffd.bernstein(index[1], 2, point[1])
                    * ffd.bernstein(index[2], 2, point[2])
                )
                expected = np.zeros(3)
                expected[axis] = weight
                assert np.max(np.abs(fd - expected)) < 1e-8


class TestDeformMesh:
    def test_zero_displacements_bitwise_equal(self, sphere):
        lat = ffd.FFDLattice.identity((-2, -2, -2), (4, 4, 4))
        out = ffd.deform_mesh(lat, sphere)
        assert out.vertices is sphere.vertices

    def test_single_control_point_changes_volume(self):
        ball = icosphere(2, radius=0.4, center=(0.5, 0.5, 0.5))
        disp = np.zeros((3, 3, 3, 3))
        disp[1, 1, 2, 2] = 0.6
        lat = ffd.FFDLattice.identity((0, 0, 0), (1, 1, 1)).with_displacements(disp)
        out = ffd.deform_mesh(lat, ball)
        assert np.array_equal(out.triangles, ball.triangles)
        assert signed_volume(out) != pytest.approx(signed_volume(ball), rel=1e-3)

    def test_mesh_outside_box_unchanged(self, cube):
        lat = ffd.FFDLattice.identity((10, 10, 10), (1, 1, 1)).with_displacements(
            np.full((3, 3, 3, 3), 0.5)
        )
        out = ffd.deform_mesh(lat, cube)
        assert np.array_equal(out.vertices, cube.vertices)


class TestHullLattice:
    def test_all_zeros_is_identity(self):
        lat = ffd.hull_lattice(ffd.GeoParams((0.0,) * 6))
        assert not lat.displacements.any()

    def test_single_parameter_two_mirrored_points(self):
        lat = ffd.hull_lattice(ffd.GeoParams((0.3, 0.0, 0.0, 0.0, 0.0, 0.0)))
        nz = np.argwhere(lat.displacements != 0.0)
        assert len(nz) == 2
        (l1, m1, n1, a1), (l2, m2, n2, a2) = nz
        assert a1 == a2 == 1  # y axis
        assert {m1, m2} == {0, 2}
        assert lat.displacements[l1, m1, n1, a1] == -lat.displacements[l2, m2, n2, a2]

    def test_z_parameter_mirrors_equal(self):
        lat = ffd.hull_lattice(ffd.GeoParams((0, 0, 0, 0, 0.5, 0)))
        nz = np.argwhere(lat.displacements != 0.0)
        assert len(nz) == 2
        values = [lat.displacements[tuple(i)] for i in nz]
        assert values[0] == values[1] == 0.5

    def test_out_of_bounds_names_parameter(self):
        with pytest.raises(ValidationError, match="mu_5"):
            ffd.GeoParams((0, 0, 0, 0, 0.6, 0))

    def test_wrong_arity(self):
        with pytest.raises(ValidationError):
            ffd.GeoParams((0.0,) * 5)

    def test_symmetric_mesh_stays_symmetric(self, hull):
        params = ffd.GeoParams((0.25, -0.1, 0.3, 0.05, 0.4, -0.15))
        out = ffd.deform_mesh(ffd.hull_lattice(params), hull)
        mirrored = np.array(out.vertices)
        mirrored[:, 1] = -mirrored[:, 1]
        # every vertex has a mirror partner in the deformed set
        dists = np.linalg.norm(out.vertices[:, None, :] - mirrored[None, :, :], axis=2)
        assert np.max(dists.min(axis=1)) < 1e-12

    def test_deformation_actually_moves_hull(self, hull):
        params = ffd.GeoParams((0.3, 0.0, 0.0, 0.0, 0.0, 0.0))
        out = ffd.deform_mesh(ffd.hull_lattice(params), hull)
        assert np.max(np.abs(out.vertices - hull.vertices)) > 1e-3


class TestProfile:
    def test_default_profile(self):
        profile = ffd.default_profile()
        assert profile.degrees == (2, 2, 2)
        assert profile.parameter_names == ("mu_1", "mu_2", "mu_3", "mu_4", "mu_5", "mu_6")
        bounds = [(b.lower, b.upper) for b in profile.bindings]
        assert bounds[:4] == [(-0.2, 0.3)] * 4
        assert bounds[4:] == [(-0.2, 0.5)] * 2

    def test_profile_round_trip(self, tmp_path):
        raw = {
            "name": "demo",
            "origin": [0, 0, 0],
            "lengths": [1, 1, 1],
            "degrees": [2, 2, 2],
            "mirror_axis": "y",
            "bindings": [
                {"name": "p", "index": [1, 2, 1], "axis": "y", "bounds": [-1, 1]}
            ],
        }
        import json

        path = tmp_path / "profile.json"
        path.write_text(json.dumps(raw))
        profile = ffd.load_profile(path)
        assert profile.name == "demo"
        assert profile.bindings[0].axis == 1

    def test_bad_binding_index(self):
        raw = {
            "origin": [0, 0, 0],
            "lengths": [1, 1, 1],
            "degrees": [2, 2, 2],
            "bindings": [{"name": "p", "index": [5, 0, 0], "axis": "x", "bounds": [0, 1]}],
        }
        with pytest.raises(ValidationError):
            ffd.load_profile(raw)
