"""
Движок HSAP: оценка множества R, обновление проекции, цикл и профили размерности
"""
import time
from contextlib import nullcontext
from concurrent.futures import Executor, ThreadPoolExecutor
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np
from loguru import logger

from hsap.core.exceptions import DataValidationError, EmptyCandidateSetError, NumericalError, StaleCandidateError
from hsap.schemas.clusters import ClusterMode, ClusterModel, ClusterModelParams
from hsap.schemas.matrices import DataMatrix
from hsap.schemas.projection import (
    Candidate,
    CandidateKind,
    HsapConfig,
    HsapResult,
    InitStrategy,
    PreparedRun,
    ProjectionState,
    RunReport,
    SweepPoint,
    TraceRecord,
)
from hsap.schemas.secants import SecantSet
from hsap.services.clustering import build_cluster_models, kmeans, remap_labels
from hsap.services.linalg import (
    as_matrix,
    mgs_orthonormalize,
    orthonormality_error,
    pca_basis,
    require_orthonormal,
    singular_values,
    smallest_singular_triplet,
    subspace_distance,
    svd,
)
from hsap.services.secant import concat_secants, cross_secants, sample_within_secants
from hsap.utils.const import DEFAULT_ENERGY, DEGENERACY_TOL, ORTHONORMAL_TOL, STREAM_INIT, STREAM_RESAMPLE
from hsap.utils.helpers import make_rng

Evaluator = Callable[[np.ndarray, int], Candidate]


def init_projection(
    data: Union[DataMatrix, np.ndarray],
    k: int,
    strategy: Union[InitStrategy, str] = InitStrategy.PCA,
    seed: int = 0,
    center: bool = False,
) -> np.ndarray:
    """
    Начальная проекция P(0)

    Args:
        data: T x n точки
        k: 0 < k < n
        strategy: pca (первые k левых сингулярных векторов) или random (MGS гауссовой матрицы)
        seed: Seed для random
        center: Центрировать данные перед PCA

    Returns:
        np.ndarray: n x k с ортонормальными столбцами

    Raises:
        DataValidationError: k вне (0, n)
    """
    points = data.points if isinstance(data, DataMatrix) else as_matrix(data, "data")
    n_points, dim = points.shape
    if not 0 < k < dim:
        raise DataValidationError(f"Projection dimension must satisfy 0 < k < n = {dim}, got {k}", code="k_out_of_range")

    if InitStrategy(strategy) is InitStrategy.RANDOM:
        gaussian = make_rng(seed, STREAM_INIT).standard_normal((dim, k))
        return mgs_orthonormalize(gaussian)

    basis = pca_basis(points, k=min(k, n_points), center=center).basis
    if basis.shape[1] < k:
        logger.warning(f"Only {basis.shape[1]} data directions for k={k}, completing the frame with canonical vectors")
        basis = mgs_orthonormalize(np.hstack([basis, np.zeros((dim, k - basis.shape[1]))]))
    return basis


def projected_lengths(projection: np.ndarray, secants: SecantSet) -> np.ndarray:
    """‖P^T s‖ для каждой секущей"""
    if secants.count == 0:
        return np.zeros(0)
    return np.linalg.norm(secants.vectors @ projection, axis=1)


def _cluster_minimum(projection: np.ndarray, model: ClusterModel, full_svd: bool) -> float:
    overlap = projection.T @ model.basis
    if full_svd:
        return float(svd(overlap).singular_values[-1])
    return float(singular_values(overlap)[-1])


def evaluate_candidates(
    projection: np.ndarray,
    models: Sequence[ClusterModel],
    cross: SecantSet,
    full_svd: bool = False,
    executor: Optional[Executor] = None,
) -> Candidate:
    """
    Минимальный элемент R и его представительный вектор

    R = сингулярные числа P^T V_j по кластерам с базисом плюс ‖P^T s‖ по секущим.
    Ничьи: кластеры по номеру раньше секущих по индексу, побеждает первый минимум.

    Args:
        projection: P, n x k ортонормальные столбцы
        models: Модели кластеров (в режиме секущих без базисов)
        cross: S~ (в режиме секущих вместе с S_j)
        full_svd: Полное SVD для каждого кластера вместо только сингулярных чисел
        executor: Пул потоков для SVD кластеров

    Returns:
        Candidate: Значение, w, w_p, вид и номер источника

    Raises:
        EmptyCandidateSetError: R пусто
    """
    projection = as_matrix(projection, "P")
    require_orthonormal(projection, "P")

    linear = [model for model in models if model.basis is not None and model.dim > 0]
    if executor is not None and len(linear) > 1:
        minima = list(executor.map(lambda model: _cluster_minimum(projection, model, full_svd), linear))
    else:
        minima = [_cluster_minimum(projection, model, full_svd) for model in linear]

    best_value, best_model = np.inf, None
    for model, value in zip(linear, minima):
        if value < best_value:
            best_value, best_model = value, model

    lengths = projected_lengths(projection, cross)
    best_secant = None
    if lengths.size:
        index = int(np.argmin(lengths))
        if lengths[index] < best_value:
            best_value, best_model, best_secant = float(lengths[index]), None, index

    if best_model is None and best_secant is None:
        raise EmptyCandidateSetError("Candidate set R is empty: no cluster bases and no secants", code="empty_candidate_set")

    value = float(np.clip(best_value, 0.0, 1.0))
    if best_secant is not None:
        w = cross.vectors[best_secant].copy()
        return Candidate(
            value=value,
            w=w,
            w_p=projection @ (projection.T @ w),
            kind=CandidateKind.SECANT,
            source_id=best_secant,
        )

    _, y, z = smallest_singular_triplet(projection.T @ best_model.basis)
    return Candidate(
        value=value,
        w=best_model.basis @ z,
        w_p=projection @ y,
        kind=CandidateKind.CLUSTER,
        source_id=best_model.index,
    )


def update_projection(
    projection: np.ndarray,
    candidate: Candidate,
    alpha: float,
    degeneracy_tol: float = DEGENERACY_TOL,
) -> np.ndarray:
    """
    Сдвиг проекции к худшему представительному вектору

    Общий случай: столбец t = argmax |P_q^T w| заменяется на w_p, MGS дает P^ с тем же
    образом, первый столбец становится normalize((1 - alpha) P^_1 + alpha (w - P^_1)),
    остальные переортогонализуются к нему. Вырожденный случай (‖P^T w‖ <= tol):
    P_1 <- (1 - alpha) P_1 + alpha w и MGS всей матрицы.

    Args:
        projection: P, n x k
        candidate: Результат evaluate_candidates для этой же P
        alpha: Шаг из [0, 1)
        degeneracy_tol: Порог вырожденного случая

    Returns:
        np.ndarray: Новая P с ортонормальными столбцами

    Raises:
        StaleCandidateError: w_p не лежит в span(P)
    """
    if not 0 <= alpha < 1:
        raise DataValidationError(f"alpha must lie in [0, 1), got {alpha}", code="bad_alpha")
    projection = as_matrix(projection, "P")
    w = np.asarray(candidate.w, dtype=np.float64)
    w_p = np.asarray(candidate.w_p, dtype=np.float64)

    outside = float(np.linalg.norm(w_p - projection @ (projection.T @ w_p)))
    if outside > ORTHONORMAL_TOL * max(1.0, float(np.linalg.norm(w_p))):
        raise StaleCandidateError(f"Candidate projection lies {outside:.3e} outside span(P)", code="stale_candidate")

    coefficients = projection.T @ w
    if float(np.linalg.norm(coefficients)) <= degeneracy_tol:
        logger.debug("Degenerate candidate: shifting the first column directly")
        shifted = projection.copy()
        shifted[:, 0] = (1.0 - alpha) * projection[:, 0] + alpha * w
        return mgs_orthonormalize(shifted)

    swap = int(np.argmax(np.abs(coefficients)))
    kept = [projection[:, q] for q in range(projection.shape[1]) if q != swap]
    frame = mgs_orthonormalize(np.column_stack([w_p / np.linalg.norm(w_p), *kept]))

    first = (1.0 - alpha) * frame[:, 0] + alpha * (w - frame[:, 0])
    frame[:, 0] = first / np.linalg.norm(first)
    return mgs_orthonormalize(frame)


def bilipschitz_lower_bound(projection: np.ndarray, secants: SecantSet) -> float:
    """
    a = min ‖P^T s‖ по секущим (b = 1)

    Raises:
        EmptyCandidateSetError: Пустое множество секущих
    """
    if secants.count == 0:
        raise EmptyCandidateSetError("Bi-Lipschitz bound needs at least one secant", code="empty_secant_set")
    projection = as_matrix(projection, "P")
    require_orthonormal(projection, "P")
    return float(np.clip(projected_lengths(projection, secants).min(), 0.0, 1.0))


def _should_stop(trace: list[TraceRecord], tol: float, window: int) -> bool:
    if tol <= 0 or len(trace) < 2 * window:
        return False
    objectives = np.array([record.objective for record in trace[-2 * window :]])
    previous, recent = objectives[:window].mean(), objectives[window:].mean()
    return abs(recent - previous) / max(abs(previous), np.finfo(np.float64).tiny) < tol


def iterate_projection(
    initial: np.ndarray,
    evaluate: Evaluator,
    alpha: float,
    max_iters: int,
    stop_tol: float = 0.0,
    stop_window: int = 1,
    degeneracy_tol: float = DEGENERACY_TOL,
) -> tuple[ProjectionState, bool]:
    """
    Общий цикл оценка -> обновление для HSAP и SAP

    Запись i трассы = min R при P(i), то есть кандидат, использованный на шаге i.

    Returns:
        tuple: (итоговое состояние, остановлен ли цикл критерием окна)
    """
    state = ProjectionState(projection=initial.copy())
    stopped_early = False
    for iteration in range(max_iters):
        candidate = evaluate(state.projection, iteration)
        record = TraceRecord(
            iteration=iteration, objective=candidate.value, kind=candidate.kind, source_id=candidate.source_id
        )
        logger.debug(f"Iteration {iteration}: objective {candidate.value:.12g} ({candidate.kind.value} {candidate.source_id})")

        updated = update_projection(state.projection, candidate, alpha, degeneracy_tol)
        error = orthonormality_error(updated)
        if error > ORTHONORMAL_TOL:
            logger.error(f"Orthonormality lost at iteration {iteration}: {error:.3e}")
            raise NumericalError(f"Projection lost orthonormality ({error:.3e}) at iteration {iteration}", code="orthonormality_lost")
        state.advance(updated, record)

        if _should_stop(state.trace, stop_tol, stop_window):
            logger.info(f"Stopping criterion met after {state.iteration} iterations")
            stopped_early = True
            break
    return state, stopped_early


def cluster_labels(data: DataMatrix, config: HsapConfig, labels: Optional[np.ndarray] = None) -> np.ndarray:
    """Метки 1..N: заданные извне или k-means"""
    if labels is not None:
        labels = np.asarray(labels, dtype=np.int64)
        if labels.shape[0] != data.n_points:
            raise DataValidationError(f"Got {labels.shape[0]} labels for {data.n_points} points", code="label_count_mismatch")
        remapped = remap_labels(labels)
        if "n_clusters" in config.model_fields_set and int(remapped.max()) != config.n_clusters:
            logger.warning(f"Labels define {int(remapped.max())} clusters, ignoring n_clusters={config.n_clusters}")
        return remapped
    if config.n_clusters == 1:
        return np.ones(data.n_points, dtype=np.int64)
    return kmeans(data, config.n_clusters, config.metric, seed=config.seed, max_iters=config.kmeans_max_iters).labels


def model_params(config: HsapConfig, k: Optional[int] = None) -> ClusterModelParams:
    k = config.k if k is None else k
    linear = config.mode is ClusterMode.LINEAR
    energy = None
    if linear and config.cluster_dim is None:
        energy = DEFAULT_ENERGY if config.energy is None else config.energy
    return ClusterModelParams(
        energy=energy,
        cluster_dim=config.cluster_dim if linear else None,
        max_dim=k - 1,
        within_samples=None if linear else config.effective_within_samples,
        anchor_count=config.anchor_count,
        anchor_strategy=config.anchor_strategy,
        seed=config.seed,
        secant_cap=config.secant_cap,
    )


def prepare_run(data: DataMatrix, config: HsapConfig, labels: Optional[np.ndarray] = None) -> PreparedRun:
    """
    Кластеризация, модели кластеров и S~ (с S_j в режиме секущих)

    Args:
        data: Набор D
        config: Параметры запуска
        labels: Готовые метки (пропускают k-means)

    Returns:
        PreparedRun: Метки, модели, секущие
    """
    remapped = cluster_labels(data, config, labels)
    models = build_cluster_models(data, remapped, config.mode, model_params(config))
    secants = cross_secants(data, [model.anchors for model in models], [model.index for model in models], cap=config.secant_cap)
    if config.mode is ClusterMode.SECANTS:
        secants = concat_secants(secants, *[model.within_secants for model in models])
    if secants.count > config.secant_cap:
        raise DataValidationError(f"{secants.count} secants exceed the cap of {config.secant_cap}", code="secant_cap_exceeded")
    logger.info(f"Prepared run: {len(models)} clusters, {secants.count} secants in S~")
    return PreparedRun(labels=remapped, models=models, secants=secants)


def _resampled_secants(data: DataMatrix, prepared: PreparedRun, config: HsapConfig, iteration: int) -> SecantSet:
    cross = prepared.secants.vectors[prepared.secants.provenance[:, 0] != prepared.secants.provenance[:, 1]]
    cross_provenance = prepared.secants.provenance[prepared.secants.provenance[:, 0] != prepared.secants.provenance[:, 1]]
    within = []
    for model in prepared.models:
        if model.size < 2:
            continue
        within.append(
            sample_within_secants(
                data.points[model.members],
                config.effective_within_samples,
                make_rng(config.seed, STREAM_RESAMPLE, iteration, model.index),
                indices=model.members,
                cluster_id=model.index,
                cap=config.secant_cap,
            )
        )
    return concat_secants(SecantSet(vectors=cross, provenance=cross_provenance), *within)


def run_hsap(data: DataMatrix, config: HsapConfig, labels: Optional[np.ndarray] = None) -> HsapResult:
    """
    Полный запуск HSAP

    кластеры -> модели -> S~ -> P(0) -> цикл {оценка, обновление} до max_iters или критерия остановки

    Args:
        data: Набор D
        config: Параметры запуска
        labels: Готовые метки кластеров (k-means пропускается)

    Returns:
        HsapResult: P_final, P(0), трасса, отчет, метки, модели, S~
    """
    started = time.perf_counter()
    if not 0 < config.k < data.dim:
        raise DataValidationError(f"Projection dimension must satisfy 0 < k < n = {data.dim}, got {config.k}", code="k_out_of_range")

    prepared = prepare_run(data, config, labels)
    initial = init_projection(data, config.k, config.init, config.seed, center=config.init_center)
    resample = config.mode is ClusterMode.SECANTS and config.resample_within

    with ThreadPoolExecutor(max_workers=config.threads) if config.threads > 1 else nullcontext() as executor:

        def evaluate(projection: np.ndarray, iteration: int) -> Candidate:
            secants = _resampled_secants(data, prepared, config, iteration) if resample else prepared.secants
            return evaluate_candidates(projection, prepared.models, secants, config.full_svd, executor)

        state, stopped_early = iterate_projection(
            initial,
            evaluate,
            config.alpha,
            config.max_iters,
            config.stop_tol,
            config.stop_window,
            config.degeneracy_tol,
        )
        final = evaluate(state.projection, state.iteration)

    bound = bilipschitz_lower_bound(state.projection, prepared.secants) if prepared.secants.count else None
    report = RunReport(
        final_objective=final.value,
        bilipschitz_a=bound,
        iterations_run=state.iteration,
        wall_time_ms=(time.perf_counter() - started) * 1000.0,
        subspace_drift=subspace_distance(initial, state.projection),
        stopped_early=stopped_early,
        n_clusters=len(prepared.models),
        n_secants=prepared.secants.count,
    )
    logger.info(
        f"HSAP finished: {report.iterations_run} iterations, objective {report.final_objective:.6g}, "
        f"a={report.bilipschitz_a}, {report.wall_time_ms:.1f} ms"
    )
    return HsapResult(
        projection=state.projection,
        initial_projection=initial,
        trace=state.trace,
        report=report,
        labels=prepared.labels,
        models=prepared.models,
        secants=prepared.secants,
    )


def dimension_sweep(
    data: DataMatrix,
    config: HsapConfig,
    k_range: Iterable[int],
    labels: Optional[np.ndarray] = None,
) -> list[SweepPoint]:
    """
    Профиль k -> итоговое значение min R

    k = n допускается и оценивается на единичной рамке без итераций.

    Returns:
        list[SweepPoint]: По точке на каждое k, в порядке k_range
    """
    profile = []
    for k in k_range:
        if not 0 < k <= data.dim:
            raise DataValidationError(f"Sweep dimension must satisfy 0 < k <= n = {data.dim}, got {k}", code="k_out_of_range")
        run_config = config.model_copy(update={"k": k})
        if k == data.dim:
            prepared = prepare_run(data, run_config, labels)
            value = evaluate_candidates(np.eye(data.dim), prepared.models, prepared.secants).value
        else:
            value = run_hsap(data, run_config, labels).report.final_objective
        logger.info(f"Sweep k={k}: objective {value:.6g}")
        profile.append(SweepPoint(k=k, final_objective=value))
    return profile


def estimate_dimension(profile: Sequence[SweepPoint], threshold: float = 0.5) -> Optional[int]:
    """Наименьшее k, при котором итоговое значение достигает порога"""
    for point in sorted(profile, key=lambda point: point.k):
        if point.final_objective >= threshold:
            return point.k
    return None
