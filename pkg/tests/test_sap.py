import numpy as np
import pytest

from hsap.core.exceptions import EmptyCandidateSetError, SecantCapExceededError
from hsap.schemas.matrices import DataMatrix
from hsap.schemas.projection import HsapConfig
from hsap.schemas.secants import SecantSet
from hsap.services.hsap_engine import bilipschitz_lower_bound, evaluate_candidates, run_hsap, update_projection
from hsap.services.linalg import orthonormality_error, principal_angles
from hsap.services.sap import sap_run, sap_step
from tests.conftest import random_frame, random_unit


def _single(vector: np.ndarray) -> SecantSet:
    return SecantSet(vectors=vector.reshape(1, -1), provenance=np.zeros((1, 4), dtype=np.int64))


class TestSapStep:
    def test_secant_inside_subspace(self):
        projection = np.eye(3)[:, :2]
        updated = sap_step(projection, _single(np.array([1.0, 0.0, 0.0])), alpha=0.01)
        assert np.max(principal_angles(updated, projection).angles) < 1e-6

    def test_orthogonal_secant_gains_length(self):
        projection = np.eye(3)[:, :2]
        secant = np.array([0.0, 0.0, 1.0])
        updated = sap_step(projection, _single(secant), alpha=0.01)
        assert np.linalg.norm(updated.T @ secant) > 0
        assert orthonormality_error(updated) < 1e-10

    def test_same_as_generic_update(self, rng):
        projection = random_frame(rng, 5, 2)
        vectors = np.vstack([random_unit(rng, 5) for _ in range(12)])
        secants = SecantSet(vectors=vectors, provenance=np.zeros((12, 4), dtype=np.int64))
        expected = update_projection(projection, evaluate_candidates(projection, [], secants), 0.02)
        np.testing.assert_array_equal(sap_step(projection, secants, alpha=0.02), expected)

    def test_empty(self):
        with pytest.raises(EmptyCandidateSetError):
            sap_step(np.eye(3)[:, :2], SecantSet.empty(3))


class TestSapRun:
    def test_two_points_approach_one(self, rng):
        data = DataMatrix(points=rng.standard_normal((2, 3)))
        result = sap_run(data, 1, alpha=0.05, iters=200)
        assert result.report.final_objective > result.trace[0].objective
        assert result.report.final_objective > 0.99

    def test_zero_iterations(self, rng):
        data = DataMatrix(points=rng.standard_normal((10, 4)))
        result = sap_run(data, 2, iters=0)
        np.testing.assert_array_equal(result.projection, result.initial_projection)
        assert result.trace == []

    def test_circle_beats_random_frames(self, rng):
        embedding = random_frame(rng, 10, 3)
        angles = np.linspace(0.0, 2.0 * np.pi, 50, endpoint=False)
        circle = np.column_stack([np.cos(angles), np.sin(angles), np.zeros(50)])
        data = DataMatrix(points=circle @ embedding.T)
        result = sap_run(data, 3, iters=80)
        best_random = max(bilipschitz_lower_bound(random_frame(rng, 10, 3), result.secants) for _ in range(200))
        assert result.report.final_objective >= best_random - 0.05

    def test_bound_matches_final_objective(self, rng):
        data = DataMatrix(points=rng.standard_normal((15, 5)))
        result = sap_run(data, 2, iters=30)
        assert result.report.final_objective == bilipschitz_lower_bound(result.projection, result.secants)
        assert result.report.n_secants == 105

    def test_cap(self, rng):
        with pytest.raises(SecantCapExceededError):
            sap_run(DataMatrix(points=rng.standard_normal((50, 3))), 2, cap=100)


def test_hsap_with_one_cluster_reproduces_sap():
    for seed in range(20):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 9))
        k = int(rng.integers(1, min(3, n - 1) + 1))
        data = DataMatrix(points=rng.standard_normal((int(rng.integers(2, 41)), n)))

        sap = sap_run(data, k, alpha=0.01, iters=50)
        config = HsapConfig(
            k=k,
            n_clusters=1,
            mode="secants",
            within_samples=10_000,
            anchor_count=1,
            alpha=0.01,
            max_iters=50,
            stop_tol=0.0,
        )
        hsap = run_hsap(data, config)
        np.testing.assert_allclose(hsap.projection, sap.projection, atol=1e-12)
        np.testing.assert_allclose(
            [record.objective for record in hsap.trace], [record.objective for record in sap.trace], atol=1e-12
        )
        assert [record.source_id for record in hsap.trace] == [record.source_id for record in sap.trace]
