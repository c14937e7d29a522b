import numpy as np
import pytest

from hsap.core.exceptions import DataValidationError
from hsap.schemas.clusters import ClusterModelParams
from hsap.schemas.matrices import DataMatrix
from hsap.services.clustering import (
    build_cluster_model,
    build_cluster_models,
    cosine_distance,
    kmeans,
    remap_labels,
    select_anchors,
)
from hsap.services.linalg import principal_angles


def _params(**overrides) -> ClusterModelParams:
    values = {"energy": 0.99, "anchor_count": 5, "seed": 0, "secant_cap": 1_000_000, "max_dim": 2}
    values.update(overrides)
    return ClusterModelParams(**values)


class TestCosineDistance:
    def test_parallel(self):
        assert cosine_distance([1.0, 0.0], [2.0, 0.0]) == 0.0

    def test_orthogonal(self):
        assert cosine_distance([1.0, 0.0], [0.0, 1.0]) == pytest.approx(1.0)

    def test_opposite(self):
        assert cosine_distance([1.0, 0.0], [-1.0, 0.0]) == pytest.approx(2.0)

    def test_zero_vector(self):
        with pytest.raises(DataValidationError) as e:
            cosine_distance([0.0, 0.0], [1.0, 0.0])
        assert e.value.code == "zero_vector"


class TestKMeans:
    def test_one_cluster_per_point(self, rng):
        points = rng.standard_normal((8, 3))
        result = kmeans(points, 8, seed=1)
        assert sorted(result.labels.tolist()) == list(range(1, 9))

    def test_separated_blobs(self, rng):
        first = rng.standard_normal((50, 2))
        second = rng.standard_normal((50, 2)) + np.array([10.0, 0.0])
        result = kmeans(np.vstack([first, second]), 2, seed=0)
        assert len(set(result.labels[:50].tolist())) == 1
        assert len(set(result.labels[50:].tolist())) == 1
        assert result.labels[0] != result.labels[50]
        assert result.converged

    def test_single_cluster(self, rng):
        points = rng.standard_normal((20, 3))
        result = kmeans(points, 1)
        assert set(result.labels.tolist()) == {1}
        np.testing.assert_allclose(result.centroids[0], points.mean(axis=0), atol=1e-12)

    @pytest.mark.parametrize("metric", ["euclidean", "cosine"])
    def test_objective_does_not_increase(self, rng, metric):
        points = rng.standard_normal((200, 5)) + 0.5
        history = np.array(kmeans(points, 6, metric=metric, seed=4).objective_history)
        assert np.all(np.diff(history) <= 1e-9 * max(1.0, history[0]))

    def test_labels_partition_points(self, synthetic):
        result = kmeans(synthetic, 3, seed=0)
        assert result.labels.shape == (700,)
        assert set(result.labels.tolist()) <= {1, 2, 3}

    def test_deterministic(self, synthetic):
        a = kmeans(synthetic, 4, seed=5)
        b = kmeans(synthetic, 4, seed=5)
        np.testing.assert_array_equal(a.labels, b.labels)

    def test_cosine_centroids_are_unit(self, rng):
        result = kmeans(np.abs(rng.standard_normal((60, 4))) + 0.1, 3, metric="cosine", seed=2)
        np.testing.assert_allclose(np.linalg.norm(result.centroids, axis=1), 1.0, atol=1e-12)

    def test_too_many_clusters(self):
        with pytest.raises(DataValidationError) as e:
            kmeans(np.zeros((3, 2)), 4)
        assert e.value.code == "too_many_clusters"

    def test_cosine_zero_vector(self):
        with pytest.raises(DataValidationError) as e:
            kmeans(np.array([[0.0, 0.0], [1.0, 1.0]]), 1, metric="cosine")
        assert e.value.code == "zero_vector"


class TestAnchors:
    def test_all_points(self, rng):
        assert select_anchors(rng.standard_normal((6, 2)), 6).tolist() == list(range(6))

    def test_extremal_order(self):
        points = np.array([[0.0], [1.0], [10.0]])
        assert select_anchors(points, 2, "extremal").tolist() == [2, 0]

    def test_extremal_pair_is_diameter(self, rng):
        points = rng.standard_normal((30, 2))
        first, second = select_anchors(points, 2, "extremal")
        distances = np.linalg.norm(points - points[first], axis=1)
        assert distances[second] == pytest.approx(distances.max())

    def test_extremal_permutation_invariant(self, rng):
        points = rng.standard_normal((25, 3))
        order = rng.permutation(25)
        direct = set(select_anchors(points, 5, "extremal").tolist())
        permuted = set(order[select_anchors(points[order], 5, "extremal")].tolist())
        assert direct == permuted

    def test_random_reproducible(self, rng):
        points = rng.standard_normal((40, 2))
        a = select_anchors(points, 10, "random", seed=3)
        assert a.tolist() == select_anchors(points, 10, "random", seed=3).tolist()
        assert len(set(a.tolist())) == 10


class TestClusterModels:
    def test_line_cluster(self, synthetic):
        model = build_cluster_model(synthetic, np.flatnonzero(synthetic.labels == 1), 1, "linear", _params())
        assert model.dim == 1
        direction = np.array([1.0, -1.0, 0.0]) / np.sqrt(2.0)
        assert abs(model.basis[:, 0] @ direction) == pytest.approx(1.0, abs=1e-12)
        assert model.anchors.size == 5
        assert np.all(np.isin(model.anchors, model.members))

    def test_plane_cluster(self, synthetic):
        model = build_cluster_model(synthetic, np.flatnonzero(synthetic.labels == 3), 3, "linear", _params())
        assert model.dim == 2
        plane, _ = np.linalg.qr(np.column_stack([[0.5, 0.0, 1.0], [-1.0, 1.0, -1.0]]))
        assert np.max(principal_angles(model.basis, plane).angles) < 1e-6

    def test_dimension_cap(self, synthetic):
        model = build_cluster_model(synthetic, np.flatnonzero(synthetic.labels == 3), 3, "linear", _params(max_dim=1))
        assert model.dim == 1

    def test_fixed_dimension_clipped_to_rank(self, synthetic):
        params = _params(energy=None, cluster_dim=3, max_dim=None)
        model = build_cluster_model(synthetic, np.flatnonzero(synthetic.labels == 1), 1, "linear", params)
        assert model.dim == 1

    def test_minimal_energy_dimension(self, rng):
        points = rng.standard_normal((200, 5)) * np.array([4.0, 2.0, 1.0, 0.5, 0.25])
        data = DataMatrix(points=points)
        model = build_cluster_model(data, np.arange(200), 1, "linear", _params(energy=0.9, max_dim=None))
        power = model.spectrum**2
        fractions = np.cumsum(power) / power.sum()
        assert fractions[model.dim - 1] >= 0.9 - 1e-12
        assert model.dim == 1 or fractions[model.dim - 2] < 0.9

    def test_anchors_deterministic(self, synthetic):
        members = np.flatnonzero(synthetic.labels == 3)
        a = build_cluster_model(synthetic, members, 3, "linear", _params(anchor_count=20))
        b = build_cluster_model(synthetic, members, 3, "linear", _params(anchor_count=20))
        np.testing.assert_array_equal(a.anchors, b.anchors)

    def test_anchor_count_clipped(self):
        data = DataMatrix(points=np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]))
        model = build_cluster_model(data, np.arange(3), 1, "linear", _params(anchor_count=20))
        assert model.anchors.size == 3

    def test_secants_mode(self, synthetic):
        members = np.flatnonzero(synthetic.labels == 1)
        model = build_cluster_model(synthetic, members, 1, "secants", _params(energy=None, max_dim=None, within_samples=30))
        assert model.dim == 0
        assert model.within_secants.count == 30
        assert np.all(np.isin(model.within_secants.provenance[:, 2:], members))

    def test_secants_mode_singleton(self):
        data = DataMatrix(points=np.array([[0.0, 1.0], [2.0, 3.0]]))
        model = build_cluster_model(data, np.array([1]), 2, "secants", _params(energy=None, anchor_count=1))
        assert model.within_secants.count == 0

    def test_models_partition_data(self, synthetic):
        models = build_cluster_models(synthetic, synthetic.labels, "linear", _params())
        assert [model.index for model in models] == [1, 2, 3]
        members = np.concatenate([model.members for model in models])
        assert sorted(members.tolist()) == list(range(700))

    def test_remap_labels(self):
        assert remap_labels(np.array([5, 7, 5, 9])).tolist() == [1, 2, 1, 3]
