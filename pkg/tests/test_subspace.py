import numpy as np
import pytest

from conftest import ridge_samples
from hullspace.errors import ValidationError
from hullspace.subspace import (
    ActiveSubspace,
    GradientSet,
    SampleSet,
    bootstrap_eigenvalues,
    covariance,
    denormalize,
    eigendecompose,
    load_samples,
    load_subspace,
    local_linear_gradients,
    normalize,
    partition,
    project,
    save_samples,
    save_subspace,
    suggest_dim,
)

UNIT_BOX_8 = np.repeat([[-1.0, 1.0]], 8, axis=0)


def unit_box(m):
    return np.repeat([[-1.0, 1.0]], m, axis=0)


class TestSampleSet:
    def test_degenerate_bounds_rejected(self):
        with pytest.raises(ValidationError, match="coordinate 1"):
            SampleSet(np.zeros((3, 2)), [[-1.0, 1.0], [2.0, 2.0]])

    def test_row_outside_box_rejected(self):
        with pytest.raises(ValidationError):
            SampleSet([[0.0, 3.0]], unit_box(2))

    def test_output_length_mismatch(self):
        with pytest.raises(ValidationError):
            SampleSet(np.zeros((3, 2)), unit_box(2), outputs=[1.0])


class TestNormalize:
    def test_lower_maps_to_minus_one(self):
        s = SampleSet([[1.87], [2.70]], [[1.87, 2.70]])
        z = normalize(s)
        assert z.inputs[:, 0] == pytest.approx([-1.0, 1.0])

    def test_midpoint_maps_to_zero(self):
        s = SampleSet([[5.0]], [[2.0, 8.0]])
        assert normalize(s).inputs[0, 0] == pytest.approx(0.0)

    def test_round_trip(self):
        rng = np.random.default_rng(0)
        box = np.column_stack([rng.uniform(-5, 0, 4), rng.uniform(1, 9, 4)])
        rows = rng.uniform(box[:, 0], box[:, 1], size=(30, 4))
        s = SampleSet(rows, box)
        back = denormalize(normalize(s), box)
        assert np.max(np.abs(back.inputs - rows)) < 1e-14


class TestLocalLinearGradients:
    def test_linear_function_recovered(self):
        rng = np.random.default_rng(1)
        m = 5
        x = rng.uniform(-1, 1, (60, m))
        f = 3.0 * x[:, 0] - 2.0 * x[:, 1]
        grads = local_linear_gradients(SampleSet(x, unit_box(m), f), k=14)
        expected = np.array([3.0, -2.0, 0.0, 0.0, 0.0])
        assert np.max(np.abs(grads.gradients - expected)) < 1e-10

    def test_constant_function_zero(self):
        rng = np.random.default_rng(2)
        x = rng.uniform(-1, 1, (40, 3))
        grads = local_linear_gradients(SampleSet(x, unit_box(3), np.full(40, 2.5)), k=6)
        assert np.max(np.abs(grads.gradients)) < 1e-12

    def test_quadratic_gradient_improves_with_cluster_radius(self):
        # f = (a.x)^2 has gradient 2 (a.p) a; shrink a cluster around p
        rng = np.random.default_rng(3)
        m = 4
        a = np.array([0.5, -0.3, 0.8, 0.1])
        p = np.array([0.3, 0.2, 0.1, 0.4])
        errors = []
        for radius in (0.5, 0.05):
            cloud = np.clip(p + rng.uniform(-radius, radius, (40, m)), -1, 1)
            cloud[0] = p
            f = (cloud @ a) ** 2
            grads = local_linear_gradients(
                SampleSet(cloud, unit_box(m), f), k=14, eval_indices=[0]
            )
            exact = 2.0 * (p @ a) * a
            errors.append(np.linalg.norm(grads.gradients[0] - exact) / np.linalg.norm(exact))
        assert errors[1] < errors[0]
        assert errors[1] < 0.05

    def test_too_few_samples_rejected(self):
        x = np.zeros((5, 2))
        x[:, 0] = np.linspace(-1, 1, 5)
        with pytest.raises(ValidationError):
            local_linear_gradients(SampleSet(x, unit_box(2), np.zeros(5)), k=14)

    def test_small_k_warns(self):
        rng = np.random.default_rng(4)
        x = rng.uniform(-1, 1, (30, 6))
        s = SampleSet(x, unit_box(6), x[:, 0])
        with pytest.warns(UserWarning, match="rank-deficient"):
            local_linear_gradients(s, k=4)

    def test_degenerate_neighborhood_excluded(self):
        # all samples stacked on two positions: no linear model possible
        x = np.zeros((20, 2))
        x[10:, :] = 0.5
        s = SampleSet(x, unit_box(2), np.arange(20.0))
        with pytest.warns(UserWarning, match="distinct"):
            with pytest.raises(ValidationError):
                local_linear_gradients(s, k=5)

    def test_unnormalized_warns(self):
        rng = np.random.default_rng(5)
        x = rng.uniform(0, 10, (30, 2))
        s = SampleSet(x, [[0.0, 10.0], [0.0, 10.0]], x[:, 0])
        with pytest.warns(UserWarning, match="un-normalized"):
            local_linear_gradients(s, k=5)


class TestCovariance:
    def test_single_gradient_outer_product(self):
        g = np.array([[1.0, 2.0, -1.0]])
        sigma = covariance(GradientSet(g, [0]))
        assert sigma == pytest.approx(np.outer(g[0], g[0]))

    def test_sign_cancellation(self):
        g = np.array([[1.0, 0.0], [-1.0, 0.0]])
        sigma = covariance(GradientSet(g, [0, 1]))
        assert sigma == pytest.approx(np.diag([1.0, 0.0]))

    def test_matches_brute_force(self):
        rng = np.random.default_rng(6)
        g = rng.normal(size=(20, 8))
        sigma = covariance(GradientSet(g, np.arange(20)))
        brute = sum(np.outer(row, row) for row in g) / 20.0
        assert np.max(np.abs(sigma - brute)) < 1e-12


class TestEigendecompose:
    def test_identity_matrix(self):
        sub = eigendecompose(np.eye(3))
        assert sub.eigenvalues == pytest.approx([1.0, 1.0, 1.0])
        assert sub.eigenvectors == pytest.approx(np.eye(3))

    def test_diagonal(self):
        sub = eigendecompose(np.diag([4.0, 1.0]))
        assert sub.eigenvalues == pytest.approx([4.0, 1.0])
        assert sub.eigenvectors == pytest.approx(np.eye(2))

    def test_rank_one_sign_convention(self):
        g = np.array([0.6, -0.8])
        sub = eigendecompose(np.outer(g, g))
        assert sub.eigenvalues == pytest.approx([1.0, 0.0], abs=1e-12)
        # largest-magnitude component positive: -g is the chosen sign
        assert sub.eigenvectors[:, 0] == pytest.approx([-0.6, 0.8])

    def test_non_finite_rejected(self):
        with pytest.raises(ValidationError):
            eigendecompose(np.array([[np.nan, 0.0], [0.0, 1.0]]))

    def test_trace_identity(self):
        rng = np.random.default_rng(7)
        g = rng.normal(size=(30, 6))
        sigma = covariance(GradientSet(g, np.arange(30)))
        sub = eigendecompose(sigma)
        assert np.sum(sub.eigenvalues) == pytest.approx(np.trace(sigma), rel=1e-10)

    def test_rotation_equivariance(self):
        rng = np.random.default_rng(8)
        g = rng.normal(size=(40, 5))
        q, _ = np.linalg.qr(rng.normal(size=(5, 5)))
        sub = eigendecompose(covariance(GradientSet(g, np.arange(40))))
        sub_rot = eigendecompose(covariance(GradientSet(g @ q.T, np.arange(40))))
        assert sub_rot.eigenvalues == pytest.approx(sub.eigenvalues, rel=1e-10, abs=1e-12)
        for j in range(5):
            mapped = q @ sub.eigenvectors[:, j]
            dot = abs(mapped @ sub_rot.eigenvectors[:, j])
            assert dot == pytest.approx(1.0, abs=1e-8)


class TestPartitionProject:
    def test_partition_shapes(self):
        sub = eigendecompose(np.diag(np.arange(8.0, 0.0, -1.0)))
        p1 = partition(sub, 1)
        assert p1.W1.shape == (8, 1) and p1.W2.shape == (8, 7)
        p7 = partition(sub, 7)
        assert p7.W2.shape == (8, 1)

    @pytest.mark.parametrize("bad", [0, 8, -1])
    def test_partition_range(self, bad):
        sub = eigendecompose(np.diag(np.arange(8.0, 0.0, -1.0)))
        with pytest.raises(ValidationError):
            partition(sub, bad)

    def test_identity_projection(self):
        sub = partition(eigendecompose(np.diag([3.0, 2.0, 1.0])), 2)
        active, inactive = project(sub, np.array([0.5, -0.3, 0.9]))
        assert active == pytest.approx([0.5, -0.3])
        assert inactive == pytest.approx([0.9])

    def test_zero_maps_to_zero(self):
        sub = partition(eigendecompose(np.diag([3.0, 2.0, 1.0])), 1)
        active, inactive = project(sub, np.zeros(3))
        assert np.all(active == 0.0) and np.all(inactive == 0.0)

    @pytest.mark.parametrize("m_active", [1, 2, 3, 4])
    def test_reconstruction_identity(self, m_active):
        rng = np.random.default_rng(9)
        q, _ = np.linalg.qr(rng.normal(size=(5, 5)))
        sub = partition(ActiveSubspace(np.arange(5.0, 0.0, -1.0), q), m_active)
        mu = rng.normal(size=5)
        active, inactive = project(sub, mu)
        back = sub.W1 @ active + sub.W2 @ inactive
        assert np.max(np.abs(back - mu)) < 1e-12

    def test_dimension_mismatch(self):
        sub = partition(eigendecompose(np.diag([3.0, 2.0, 1.0])), 1)
        with pytest.raises(ValidationError):
            project(sub, np.zeros(4))


class TestSuggestDim:
    def test_dominant_first_gap(self):
        assert suggest_dim([10.0, 0.1, 0.09, 0.08]) == 1

    def test_second_gap(self):
        assert suggest_dim([5.0, 4.9, 0.01, 0.009]) == 2

    def test_equal_eigenvalues_tie_break(self):
        assert suggest_dim([1.0, 1.0, 1.0]) == 1

    def test_zero_tail_counts_as_gap(self):
        assert suggest_dim([2.0, 1.0, 0.0]) == 2

    def test_all_zero_rejected(self):
        with pytest.raises(ValidationError):
            suggest_dim([0.0, 0.0])


class TestBootstrap:
    def test_identical_rows_zero_width(self):
        g = np.tile([1.0, -2.0, 0.5], (10, 1))
        summary = bootstrap_eigenvalues(GradientSet(g, np.arange(10)), replicates=50, seed=0)
        assert summary.lower == pytest.approx(summary.upper)

    def test_single_replicate(self):
        rng = np.random.default_rng(10)
        g = rng.normal(size=(8, 3))
        summary = bootstrap_eigenvalues(GradientSet(g, np.arange(8)), replicates=1, seed=3)
        rep_rows = g[np.random.default_rng((3, 0)).integers(0, 8, 8)]
        lam = eigendecompose(rep_rows.T @ rep_rows / 8).eigenvalues
        assert summary.lower == pytest.approx(lam)
        assert summary.upper == pytest.approx(lam)

    def test_containment_and_determinism(self):
        g = np.array([[2.0, 0.1], [0.3, -1.0]])
        grads = GradientSet(g, [0, 1])
        s1 = bootstrap_eigenvalues(grads, replicates=1000, seed=42)
        s2 = bootstrap_eigenvalues(grads, replicates=1000, seed=42)
        point = eigendecompose(covariance(grads)).eigenvalues
        assert np.all(s1.lower <= point) and np.all(point <= s1.upper)
        assert np.array_equal(s1.lower, s2.lower) and np.array_equal(s1.upper, s2.upper)

    def test_percentile_narrower_than_minmax(self):
        rng = np.random.default_rng(11)
        g = rng.normal(size=(50, 4))
        grads = GradientSet(g, np.arange(50))
        mm = bootstrap_eigenvalues(grads, replicates=300, seed=1, method="minmax")
        pc = bootstrap_eigenvalues(grads, replicates=300, seed=1, method="percentile")
        assert np.all(pc.lower >= mm.lower) and np.all(pc.upper <= mm.upper)

    def test_subspace_distances_reported(self):
        rng = np.random.default_rng(12)
        g = rng.normal(size=(30, 4))
        summary = bootstrap_eigenvalues(GradientSet(g, np.arange(30)), replicates=20, seed=0)
        assert summary.subspace_distances.shape == (3,)
        assert np.all(summary.subspace_distances >= 0.0)


class TestRidgeStructure:
    def test_exact_rank_one_recovery(self):
        x, _, a = ridge_samples(seed=0, direction=np.full(8, 1.0))
        s = x @ a
        grads = GradientSet((3.0 * s**2 + 1.0)[:, None] * a, np.arange(len(x)))
        sub = eigendecompose(covariance(grads))
        lam = sub.eigenvalues
        assert lam[1] / lam[0] <= 1e-10
        assert abs(sub.eigenvectors[:, 0] @ a) >= 1.0 - 1e-8

    def test_linear_exact_for_all_k(self):
        rng = np.random.default_rng(13)
        m = 4
        x = rng.uniform(-1, 1, (50, m))
        coef = np.array([1.0, -2.0, 0.5, 3.0])
        s = SampleSet(x, unit_box(m), x @ coef)
        for k in (m + 1, 10, 20):
            grads = local_linear_gradients(s, k=k)
            assert np.max(np.abs(grads.gradients - coef)) < 1e-10


class TestPersistence:
    def test_samples_round_trip(self, tmp_path):
        rng = np.random.default_rng(14)
        box = np.array([[-0.2, 0.3], [500.0, 800.0]])
        rows = rng.uniform(box[:, 0], box[:, 1], size=(25, 2))
        s = SampleSet(rows, box, outputs=rng.normal(size=25))
        path = tmp_path / "data.csv"
        save_samples(s, path)
        back = load_samples(path)
        assert np.array_equal(back.inputs, s.inputs)
        assert np.array_equal(back.outputs, s.outputs)
        assert np.array_equal(back.box, s.box)

    def test_samples_without_outputs(self, tmp_path):
        s = SampleSet([[0.1, 0.2], [0.3, 0.4]], unit_box(2))
        path = tmp_path / "designs.csv"
        save_samples(s, path)
        assert load_samples(path).outputs is None

    def test_subspace_round_trip(self, tmp_path):
        rng = np.random.default_rng(15)
        g = rng.normal(size=(30, 5))
        sub = partition(eigendecompose(covariance(GradientSet(g, np.arange(30)))), 2)
        path = tmp_path / "subspace.json"
        save_subspace(sub, path)
        back = load_subspace(path)
        assert back.active_dim == 2
        assert np.array_equal(back.eigenvalues, sub.eigenvalues)
        assert np.array_equal(back.eigenvectors, sub.eigenvectors)
