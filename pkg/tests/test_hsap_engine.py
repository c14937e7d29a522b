import time

import numpy as np
import pytest

from hsap.core.exceptions import DataValidationError, EmptyCandidateSetError, StaleCandidateError
from hsap.schemas.clusters import ClusterModel
from hsap.schemas.matrices import DataMatrix
from hsap.schemas.projection import Candidate, CandidateKind, HsapConfig, SweepPoint
from hsap.schemas.secants import SecantSet
from hsap.services.hsap_engine import (
    bilipschitz_lower_bound,
    dimension_sweep,
    estimate_dimension,
    evaluate_candidates,
    init_projection,
    run_hsap,
    update_projection,
)
from hsap.services.linalg import orthonormality_error, principal_angles
from tests.conftest import random_frame, random_unit


def _model(index: int, basis: np.ndarray) -> ClusterModel:
    return ClusterModel(index=index, members=[0], anchors=[0], basis=basis)


def _secants(vectors: np.ndarray) -> SecantSet:
    vectors = np.atleast_2d(vectors)
    return SecantSet(vectors=vectors, provenance=np.zeros((vectors.shape[0], 4), dtype=np.int64))


def _candidate(projection: np.ndarray, w: np.ndarray) -> Candidate:
    return Candidate(
        value=min(1.0, float(np.linalg.norm(projection.T @ w))),
        w=w,
        w_p=projection @ (projection.T @ w),
        kind=CandidateKind.SECANT,
        source_id=0,
    )


def _planar_lines(rng: np.random.Generator) -> tuple[DataMatrix, np.ndarray]:
    """Три прямые внутри двумерного подпространства R^4"""
    plane = random_frame(rng, 4, 2)
    blocks, labels = [], []
    for index, (direction, offset) in enumerate([((1.0, 0.0), (0.0, 3.0)), ((0.0, 1.0), (3.0, 0.0)), ((1.0, 1.0), (-3.0, 3.0))], start=1):
        t = rng.uniform(-2.0, 2.0, 30)
        coordinates = t[:, None] * np.array(direction) + np.array(offset)
        blocks.append(coordinates @ plane.T)
        labels.extend([index] * 30)
    return DataMatrix(points=np.vstack(blocks)), np.array(labels)


def _synthetic_config(**overrides) -> HsapConfig:
    values = {"k": 2, "n_clusters": 3, "alpha": 0.01, "max_iters": 80, "anchor_count": 20, "stop_tol": 0.0}
    values.update(overrides)
    return HsapConfig(**values)


class TestInitProjection:
    def test_pca_recovers_low_rank_subspace(self, rng):
        plane = random_frame(rng, 5, 2)
        points = rng.standard_normal((40, 2)) @ plane.T
        projection = init_projection(points, 2)
        assert np.max(principal_angles(projection, plane).angles) < 1e-8

    def test_pca_captures_most_energy(self, synthetic):
        projection = init_projection(synthetic, 2)
        energy = np.linalg.norm(synthetic.points @ projection) ** 2
        rng = np.random.default_rng(0)
        for _ in range(200):
            assert energy >= np.linalg.norm(synthetic.points @ random_frame(rng, 3, 2)) ** 2 - 1e-9

    def test_random_is_reproducible(self, synthetic):
        a = init_projection(synthetic, 2, "random", seed=7)
        b = init_projection(synthetic, 2, "random", seed=7)
        np.testing.assert_array_equal(a, b)
        assert orthonormality_error(a) < 1e-10

    def test_rank_deficient_data_is_completed(self):
        points = np.array([[1.0, 0.0, 0.0, 0.0], [2.0, 0.0, 0.0, 0.0]])
        projection = init_projection(points, 3)
        assert projection.shape == (4, 3)
        assert orthonormality_error(projection) < 1e-10

    @pytest.mark.parametrize("k", [0, 3])
    def test_k_out_of_range(self, synthetic, k):
        with pytest.raises(DataValidationError) as e:
            init_projection(synthetic, k)
        assert e.value.code == "k_out_of_range"


class TestEvaluateCandidates:
    def test_contained_cluster(self):
        projection = np.eye(3)[:, :2]
        candidate = evaluate_candidates(projection, [_model(1, np.eye(3)[:, [0]])], SecantSet.empty(3))
        assert candidate.value == pytest.approx(1.0, abs=1e-12)
        assert candidate.kind is CandidateKind.CLUSTER
        assert candidate.source_id == 1

    def test_orthogonal_secant(self):
        projection = np.eye(3)[:, :2]
        candidate = evaluate_candidates(projection, [], _secants(np.array([0.0, 0.0, 1.0])))
        assert candidate.value == 0.0
        np.testing.assert_array_equal(candidate.w, [0.0, 0.0, 1.0])
        np.testing.assert_array_equal(candidate.w_p, [0.0, 0.0, 0.0])

    def test_cluster_wins_tie_with_secant(self):
        projection = np.eye(2)[:, [0]]
        candidate = evaluate_candidates(projection, [_model(4, np.eye(2)[:, [0]])], _secants(np.array([1.0, 0.0])))
        assert candidate.kind is CandidateKind.CLUSTER
        assert candidate.source_id == 4

    def test_first_secant_wins_tie(self):
        projection = np.eye(3)[:, :2]
        secants = _secants(np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 1.0]]))
        candidate = evaluate_candidates(projection, [], secants)
        assert candidate.source_id == 1

    def test_empty_candidate_set(self):
        with pytest.raises(EmptyCandidateSetError):
            evaluate_candidates(np.eye(3)[:, :2], [], SecantSet.empty(3))

    def test_matches_brute_force(self, rng):
        for _ in range(100):
            n = int(rng.integers(3, 11))
            k = int(rng.integers(1, n))
            projection = random_frame(rng, n, k)
            models = [_model(j, random_frame(rng, n, int(rng.integers(1, min(3, k) + 1)))) for j in range(1, int(rng.integers(0, 6)) + 1)]
            count = int(rng.integers(0 if models else 1, 51))
            vectors = rng.standard_normal((count, n))
            secants = _secants(vectors / np.linalg.norm(vectors, axis=1)[:, None]) if count else SecantSet.empty(n)

            expected = (np.inf, None, None)
            for model in models:
                value = np.linalg.svd(projection.T @ model.basis, compute_uv=False)[-1]
                if value < expected[0]:
                    expected = (value, CandidateKind.CLUSTER, model.index)
            for index in range(secants.count):
                value = np.linalg.norm(projection.T @ secants.vectors[index])
                if value < expected[0]:
                    expected = (value, CandidateKind.SECANT, index)

            candidate = evaluate_candidates(projection, models, secants)
            assert candidate.value == pytest.approx(min(expected[0], 1.0), abs=1e-12)
            assert (candidate.kind, candidate.source_id) == expected[1:]
            assert np.linalg.norm(candidate.w) == pytest.approx(1.0, abs=1e-10)
            w_p = candidate.w_p
            assert np.linalg.norm(w_p - projection @ (projection.T @ w_p)) < 1e-10

    def test_values_lie_in_unit_interval(self, rng):
        projection = random_frame(rng, 6, 3)
        models = [_model(1, random_frame(rng, 6, 2))]
        candidate = evaluate_candidates(projection, models, SecantSet.empty(6), full_svd=True)
        assert 0.0 <= candidate.value <= 1.0


class TestUpdateProjection:
    def test_zero_step_keeps_subspace(self, rng):
        projection = random_frame(rng, 6, 3)
        updated = update_projection(projection, _candidate(projection, random_unit(rng, 6)), 0.0)
        assert np.max(principal_angles(updated, projection).angles) < 1e-8

    def test_degenerate_candidate(self):
        projection = np.eye(3)[:, [0]]
        candidate = Candidate(value=0.0, w=np.array([0.0, 1.0, 0.0]), w_p=np.zeros(3), kind=CandidateKind.SECANT, source_id=0)
        updated = update_projection(projection, candidate, 0.1)
        np.testing.assert_allclose(updated[:, 0], np.array([0.9, 0.1, 0.0]) / np.sqrt(0.82), atol=1e-15)

    @pytest.mark.parametrize("alpha", [0.01, 0.05])
    def test_moves_toward_candidate(self, rng, alpha):
        for _ in range(100):
            projection = random_frame(rng, 6, 3)
            w = random_unit(rng, 6)
            updated = update_projection(projection, _candidate(projection, w), alpha)
            assert orthonormality_error(updated) < 1e-8
            assert np.linalg.norm(updated.T @ w) > np.linalg.norm(projection.T @ w)

    def test_cluster_candidate(self, rng):
        projection = random_frame(rng, 5, 2)
        candidate = evaluate_candidates(projection, [_model(1, random_frame(rng, 5, 1))], SecantSet.empty(5))
        updated = update_projection(projection, candidate, 0.05)
        assert np.linalg.norm(updated.T @ candidate.w) > candidate.value

    def test_stale_candidate(self, rng):
        projection = np.eye(4)[:, :2]
        w = np.array([0.0, 0.0, 1.0, 0.0])
        candidate = Candidate(value=0.0, w=w, w_p=w, kind=CandidateKind.SECANT, source_id=0)
        with pytest.raises(StaleCandidateError):
            update_projection(projection, candidate, 0.01)

    def test_rejects_bad_alpha(self, rng):
        projection = random_frame(rng, 4, 2)
        with pytest.raises(DataValidationError):
            update_projection(projection, _candidate(projection, random_unit(rng, 4)), 1.0)

    @pytest.mark.slow
    def test_orthonormality_over_many_steps(self, rng):
        projection = random_frame(rng, 8, 3)
        for _ in range(10_000):
            projection = update_projection(projection, _candidate(projection, random_unit(rng, 8)), 0.05)
            assert orthonormality_error(projection) < 1e-8


@pytest.mark.slow
def test_iteration_time_at_most_linear_in_secants(rng):
    n, k = 10, 2
    models = [_model(j, random_frame(rng, n, 1)) for j in range(1, 4)]
    sizes = [1_000, 10_000, 100_000]
    timings = []
    for size in sizes:
        vectors = rng.standard_normal((size, n))
        secants = _secants(vectors / np.linalg.norm(vectors, axis=1, keepdims=True))
        projection = random_frame(rng, n, k)
        evaluate_candidates(projection, models, secants)
        best = np.inf
        for _ in range(5):
            start = time.perf_counter()
            for _ in range(5):
                projection = update_projection(projection, evaluate_candidates(projection, models, secants), 0.01)
            best = min(best, (time.perf_counter() - start) / 5)
        timings.append(best)
    for (small, t_small), (large, t_large) in zip(zip(sizes, timings), zip(sizes[1:], timings[1:])):
        assert t_large / t_small <= 1.3 * large / small


class TestRunHsap:
    def test_synthetic_run(self, synthetic):
        start = time.perf_counter()
        result = run_hsap(synthetic, _synthetic_config(threads=1), synthetic.labels)
        assert time.perf_counter() - start < 10.0
        assert len(result.trace) == 80
        assert result.report.iterations_run == 80
        assert not result.report.stopped_early
        assert result.report.final_objective >= result.trace[0].objective
        assert result.report.n_secants == 1200
        assert [model.dim for model in result.models] == [1, 1, 1]
        assert orthonormality_error(result.projection) < 1e-8

        projected = synthetic.points @ result.projection
        for a in (1, 2, 3):
            for b in range(a + 1, 4):
                gaps = np.linalg.norm(projected[synthetic.labels == a][:, None] - projected[synthetic.labels == b][None], axis=2)
                assert gaps.min() > 0

    def test_deterministic(self, synthetic):
        a = run_hsap(synthetic, _synthetic_config(max_iters=20), synthetic.labels)
        b = run_hsap(synthetic, _synthetic_config(max_iters=20), synthetic.labels)
        np.testing.assert_array_equal(a.projection, b.projection)
        assert a.trace == b.trace

    def test_zero_iterations(self, synthetic):
        result = run_hsap(synthetic, _synthetic_config(max_iters=0), synthetic.labels)
        np.testing.assert_array_equal(result.projection, result.initial_projection)
        assert result.trace == []
        assert result.report.subspace_drift < 1e-9

    def test_contained_data_starts_at_one(self, rng):
        data, labels = _planar_lines(rng)
        config = HsapConfig(k=3, n_clusters=3, max_iters=5, stop_tol=0.0, anchor_count=5)
        result = run_hsap(data, config, labels)
        assert result.trace[0].objective == pytest.approx(1.0, abs=1e-9)

    def test_stops_on_flat_objective(self, rng):
        data, labels = _planar_lines(rng)
        config = HsapConfig(k=3, n_clusters=3, max_iters=80, stop_tol=1e-6, stop_window=3, anchor_count=5)
        result = run_hsap(data, config, labels)
        assert result.report.stopped_early
        assert len(result.trace) == 6

    def test_kmeans_secants_mode(self, synthetic):
        config = HsapConfig(k=2, n_clusters=2, mode="secants", within_samples=100, max_iters=10, stop_tol=0.0)
        result = run_hsap(synthetic, config)
        assert len(result.trace) == 10
        assert result.report.n_clusters == 2
        assert set(result.labels.tolist()) == {1, 2}
        assert result.report.bilipschitz_a == pytest.approx(result.report.final_objective)

    def test_resampled_within_secants(self, synthetic):
        config = HsapConfig(
            k=2, n_clusters=3, mode="secants", within_samples=50, resample_within=True, max_iters=10, stop_tol=0.0
        )
        result = run_hsap(synthetic, config, synthetic.labels)
        assert len(result.trace) == 10

    def test_threads_do_not_change_results(self, synthetic):
        single = run_hsap(synthetic, _synthetic_config(max_iters=20), synthetic.labels)
        pooled = run_hsap(synthetic, _synthetic_config(max_iters=20, threads=4), synthetic.labels)
        np.testing.assert_array_equal(single.projection, pooled.projection)

    def test_full_svd_matches(self, synthetic):
        plain = run_hsap(synthetic, _synthetic_config(max_iters=20), synthetic.labels)
        full = run_hsap(synthetic, _synthetic_config(max_iters=20, full_svd=True), synthetic.labels)
        np.testing.assert_allclose(
            [record.objective for record in plain.trace], [record.objective for record in full.trace], atol=1e-9
        )

    def test_k_must_be_below_dimension(self, synthetic):
        with pytest.raises(DataValidationError):
            run_hsap(synthetic, _synthetic_config(k=3), synthetic.labels)


class TestConfig:
    def test_energy_and_cluster_dim_conflict(self):
        with pytest.raises(ValueError):
            HsapConfig(k=2, energy=0.9, cluster_dim=1)

    def test_energy_rejected_in_secants_mode(self):
        with pytest.raises(ValueError):
            HsapConfig(k=2, mode="secants", energy=0.9)

    def test_within_samples_rejected_in_linear_mode(self):
        with pytest.raises(ValueError):
            HsapConfig(k=2, within_samples=10)

    def test_default_within_samples(self):
        assert HsapConfig(k=2, mode="secants").effective_within_samples == 500


class TestBilipschitz:
    def test_identity(self, rng):
        vectors = rng.standard_normal((10, 3))
        secants = _secants(vectors / np.linalg.norm(vectors, axis=1)[:, None])
        assert bilipschitz_lower_bound(np.eye(3), secants) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal_secant(self):
        assert bilipschitz_lower_bound(np.eye(2)[:, [0]], _secants(np.array([0.0, 1.0]))) == 0.0

    def test_matches_minimum(self, rng):
        projection = random_frame(rng, 5, 2)
        vectors = rng.standard_normal((30, 5))
        vectors /= np.linalg.norm(vectors, axis=1)[:, None]
        expected = min(np.linalg.norm(projection.T @ v) for v in vectors)
        assert bilipschitz_lower_bound(projection, _secants(vectors)) == pytest.approx(expected, abs=1e-12)

    def test_empty(self):
        with pytest.raises(EmptyCandidateSetError):
            bilipschitz_lower_bound(np.eye(2), SecantSet.empty(2))


class TestDimensionSweep:
    def test_synthetic_profile(self, synthetic):
        profile = dimension_sweep(synthetic, _synthetic_config(k=1), [1, 2, 3], synthetic.labels)
        assert [point.k for point in profile] == [1, 2, 3]
        values = [point.final_objective for point in profile]
        assert values[2] == pytest.approx(1.0, abs=1e-9)
        assert values[1] > values[0]

    def test_one_below_full_dimension_is_near_one(self, rng):
        centers = np.array([[0.0, 0.0, 0.0], [10.0, 0.0, 0.0], [0.0, 10.0, 0.0]])
        points = np.vstack([center + rng.standard_normal((20, 3)) * [1.0, 1.0, 0.1] for center in centers])
        labels = np.repeat([1, 2, 3], 20)
        config = HsapConfig(k=1, n_clusters=3, anchor_count=5, max_iters=40, stop_tol=0.0)
        profile = dimension_sweep(DataMatrix(points=points), config, [1, 2], labels)
        assert profile[1].final_objective > 0.9
        assert profile[1].final_objective > profile[0].final_objective

    def test_rejects_too_large_k(self, synthetic):
        with pytest.raises(DataValidationError):
            dimension_sweep(synthetic, _synthetic_config(k=1), [4], synthetic.labels)

    def test_estimate_dimension(self):
        profile = [SweepPoint(k=1, final_objective=0.1), SweepPoint(k=2, final_objective=0.6), SweepPoint(k=3, final_objective=1.0)]
        assert estimate_dimension(profile, 0.5) == 2
        assert estimate_dimension(profile, 0.05) == 1
        assert estimate_dimension(profile[:1], 0.5) is None
