"""
Сервис кластеризации: k-means, выбор якорей и модели кластеров
"""
from typing import Optional, Union

import numpy as np
from loguru import logger
from scipy.spatial.distance import cdist

from hsap.core.exceptions import ConfigurationError, DataValidationError
from hsap.schemas.clusters import (
    AnchorStrategy,
    ClusterMode,
    ClusterModel,
    ClusterModelParams,
    DistanceMetric,
    KMeansResult,
)
from hsap.schemas.matrices import DataMatrix
from hsap.schemas.secants import SecantSet
from hsap.services.linalg import pca_basis
from hsap.services.secant import sample_within_secants
from hsap.utils.const import STREAM_ANCHORS, STREAM_KMEANS, STREAM_WITHIN
from hsap.utils.helpers import make_rng

SeedLike = Union[int, np.random.Generator]


def _generator(seed: SeedLike, *streams: int) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else make_rng(seed, *streams)


def cosine_distance(u: np.ndarray, v: np.ndarray) -> float:
    """
    d(u, v) = 1 - cos(theta)

    Raises:
        DataValidationError: Нулевой вектор
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    norm_u, norm_v = float(np.linalg.norm(u)), float(np.linalg.norm(v))
    if norm_u == 0.0 or norm_v == 0.0:
        raise DataValidationError("Cosine distance is undefined for zero vectors", code="zero_vector")
    return float(np.clip(1.0 - (u @ v) / (norm_u * norm_v), 0.0, 2.0))


def _distances(points: np.ndarray, centroids: np.ndarray, metric: DistanceMetric) -> np.ndarray:
    if metric is DistanceMetric.COSINE:
        return np.clip(cdist(points, centroids, metric="cosine"), 0.0, 2.0)
    return cdist(points, centroids, metric="sqeuclidean")


def _seed_centroids(points: np.ndarray, n_clusters: int, metric: DistanceMetric, rng: np.random.Generator) -> np.ndarray:
    """k-means++: следующий центр с вероятностью, пропорциональной расстоянию"""
    n_points = points.shape[0]
    chosen = [int(rng.integers(n_points))]
    closest = _distances(points, points[chosen], metric)[:, 0]
    for _ in range(1, n_clusters):
        weights = closest.copy()
        weights[chosen] = 0.0
        total = float(weights.sum())
        if total > 0.0:
            pick = int(rng.choice(n_points, p=weights / total))
        else:
            remaining = np.setdiff1d(np.arange(n_points), chosen)
            pick = int(rng.choice(remaining))
        chosen.append(pick)
        closest = np.minimum(closest, _distances(points, points[[pick]], metric)[:, 0])
    return points[chosen].copy()


def _update_centroids(
    points: np.ndarray,
    labels: np.ndarray,
    centroids: np.ndarray,
    point_costs: np.ndarray,
    metric: DistanceMetric,
) -> np.ndarray:
    n_clusters = centroids.shape[0]
    sums = np.zeros_like(centroids)
    np.add.at(sums, labels, points)
    counts = np.bincount(labels, minlength=n_clusters)

    updated = centroids.copy()
    filled = counts > 0
    if metric is DistanceMetric.COSINE:
        norms = np.linalg.norm(sums, axis=1)
        usable = filled & (norms > 0)
        updated[usable] = sums[usable] / norms[usable][:, None]
    else:
        updated[filled] = sums[filled] / counts[filled][:, None]

    empty = np.flatnonzero(~filled)
    if empty.size:
        # пустой кластер получает самую удаленную от своего центра точку
        order = np.argsort(-point_costs, kind="stable")
        for cluster, point in zip(empty, order[: empty.size]):
            logger.warning(f"k-means: cluster {cluster + 1} is empty, reseeding from point {point}")
            updated[cluster] = points[point]
    return updated


def kmeans(
    data: Union[DataMatrix, np.ndarray],
    n_clusters: int,
    metric: Union[DistanceMetric, str] = DistanceMetric.EUCLIDEAN,
    seed: SeedLike = 0,
    max_iters: int = 300,
) -> KMeansResult:
    """
    Алгоритм Ллойда с посевом k-means++

    Целевая функция: сумма квадратов евклидовых расстояний или сумма косинусных
    расстояний до центров; не возрастает от итерации к итерации.

    Args:
        data: T x n точки
        n_clusters: N <= T
        metric: euclidean или cosine (сферический k-means)
        seed: Seed или генератор
        max_iters: Предел итераций

    Returns:
        KMeansResult: Метки 1..N, центры, история целевой функции

    Raises:
        DataValidationError: N > T или нулевая точка при косинусной метрике
    """
    points = data.points if isinstance(data, DataMatrix) else np.asarray(data, dtype=np.float64)
    metric = DistanceMetric(metric)
    n_points = points.shape[0]
    if n_clusters < 1:
        raise ConfigurationError(f"Cluster count must be positive, got {n_clusters}", code="bad_cluster_count")
    if n_clusters > n_points:
        raise DataValidationError(f"Cannot form {n_clusters} clusters from {n_points} points", code="too_many_clusters")
    if max_iters < 1:
        raise ConfigurationError(f"max_iters must be positive, got {max_iters}", code="bad_iterations")

    if metric is DistanceMetric.COSINE:
        norms = np.linalg.norm(points, axis=1)
        if np.any(norms == 0):
            raise DataValidationError(
                f"Cosine k-means: {int(np.count_nonzero(norms == 0))} zero vectors in data", code="zero_vector"
            )
        points = points / norms[:, None]

    rng = _generator(seed, STREAM_KMEANS)
    centroids = _seed_centroids(points, n_clusters, metric, rng)

    labels: Optional[np.ndarray] = None
    history: list[float] = []
    converged = False
    for _ in range(max_iters):
        distances = _distances(points, centroids, metric)
        assigned = np.argmin(distances, axis=1)
        costs = distances[np.arange(n_points), assigned]
        history.append(float(costs.sum()))
        if labels is not None and np.array_equal(assigned, labels):
            converged = True
            break
        labels = assigned
        centroids = _update_centroids(points, labels, centroids, costs, metric)

    logger.info(
        f"k-means ({metric.value}): N={n_clusters}, {len(history)} iterations, "
        f"objective {history[-1]:.6g}, converged={converged}"
    )
    return KMeansResult(
        labels=labels + 1,
        centroids=centroids,
        objective_history=history,
        iterations=len(history),
        converged=converged,
    )


def select_anchors(
    cluster_points: np.ndarray,
    count: int,
    strategy: Union[AnchorStrategy, str] = AnchorStrategy.RANDOM,
    seed: SeedLike = 0,
) -> np.ndarray:
    """
    Выбирает якоря A_j

    random: равномерно без возвращения. extremal: жадный k-center, первый якорь
    самый далекий от среднего, каждый следующий максимизирует минимальное
    расстояние до выбранных (ничьи к меньшему номеру).

    Returns:
        np.ndarray: Локальные номера строк cluster_points
    """
    points = np.asarray(cluster_points, dtype=np.float64)
    size = points.shape[0]
    strategy = AnchorStrategy(strategy)
    if not 1 <= count <= size:
        raise ConfigurationError(f"Anchor count must lie in [1, {size}], got {count}", code="bad_anchor_count")

    if strategy is AnchorStrategy.RANDOM:
        return np.sort(_generator(seed, STREAM_ANCHORS).choice(size, size=count, replace=False)).astype(np.int64)

    chosen = [int(np.argmax(np.linalg.norm(points - points.mean(axis=0), axis=1)))]
    closest = np.linalg.norm(points - points[chosen[0]], axis=1)
    while len(chosen) < count:
        candidates = closest.copy()
        candidates[chosen] = -np.inf
        pick = int(np.argmax(candidates))
        chosen.append(pick)
        closest = np.minimum(closest, np.linalg.norm(points - points[pick], axis=1))
    return np.array(chosen, dtype=np.int64)


def build_cluster_model(
    data: DataMatrix,
    members: np.ndarray,
    index: int,
    mode: Union[ClusterMode, str],
    params: ClusterModelParams,
) -> ClusterModel:
    """
    Строит представление кластера D_j

    linear: V_j = PCA-базис центрированного кластера (энергия или фиксированное k_j,
    не больше max_dim). secants: S_j = выборка внутрикластерных секущих.

    Args:
        data: Весь набор D
        members: Глобальные номера точек кластера
        index: Номер кластера j (1..N)
        mode: linear или secants
        params: Параметры модели

    Returns:
        ClusterModel: Модель кластера
    """
    mode = ClusterMode(mode)
    members = np.sort(np.asarray(members, dtype=np.int64))
    if members.size == 0:
        raise DataValidationError(f"Cluster {index} is empty", code="empty_cluster")
    points = data.points[members]

    anchor_count = params.anchor_count
    if anchor_count > members.size:
        logger.warning(f"Cluster {index}: anchor count {anchor_count} clipped to cluster size {members.size}")
        anchor_count = int(members.size)
    local = select_anchors(points, anchor_count, params.anchor_strategy, make_rng(params.seed, STREAM_ANCHORS, index))
    anchors = members[local]

    if mode is ClusterMode.SECANTS:
        if members.size < 2:
            logger.warning(f"Cluster {index} is a singleton, it contributes no within-cluster secants")
            within = SecantSet.empty(data.dim)
        else:
            within = sample_within_secants(
                points,
                params.within_samples if params.within_samples is not None else members.size * members.size,
                make_rng(params.seed, STREAM_WITHIN, index),
                indices=members,
                cluster_id=index,
                cap=params.secant_cap,
            )
        return ClusterModel(index=index, members=members, anchors=anchors, within_secants=within)

    if params.cluster_dim is not None:
        pca = pca_basis(points, k=min(points.shape))
        rank = int(np.count_nonzero(pca.spectrum))
        cluster_dim = params.cluster_dim
        if cluster_dim > rank:
            logger.warning(f"Cluster {index}: k_j={cluster_dim} clipped to the cluster rank {rank}")
            cluster_dim = rank
        basis = pca.basis[:, :cluster_dim]
    else:
        pca = pca_basis(points, energy=params.energy)
        basis = pca.basis

    if params.max_dim is not None and basis.shape[1] > params.max_dim:
        logger.warning(f"Cluster {index}: k_j={basis.shape[1]} capped at {params.max_dim} (k - 1)")
        basis = basis[:, : params.max_dim]

    logger.debug(f"Cluster {index}: {members.size} points, k_j={basis.shape[1]}, {anchors.size} anchors")
    return ClusterModel(
        index=index,
        members=members,
        anchors=anchors,
        basis=basis,
        mean=pca.mean,
        spectrum=pca.spectrum,
    )


def remap_labels(labels: np.ndarray) -> np.ndarray:
    """Произвольные целые метки -> 1..N в порядке возрастания"""
    labels = np.asarray(labels, dtype=np.int64)
    _, remapped = np.unique(labels, return_inverse=True)
    return remapped.astype(np.int64).ravel() + 1


def build_cluster_models(
    data: DataMatrix,
    labels: np.ndarray,
    mode: Union[ClusterMode, str],
    params: ClusterModelParams,
) -> list[ClusterModel]:
    """
    Модели всех кластеров; метки переводятся в 1..N

    Args:
        data: Набор D
        labels: Метка на каждую точку
        mode: linear или secants
        params: Общие параметры моделей

    Returns:
        list[ClusterModel]: Модели в порядке номеров кластеров
    """
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape[0] != data.n_points:
        raise DataValidationError(f"Got {labels.shape[0]} labels for {data.n_points} points", code="label_count_mismatch")
    remapped = remap_labels(labels)
    models = [
        build_cluster_model(data, np.flatnonzero(remapped == index), index, mode, params)
        for index in range(1, int(remapped.max()) + 1)
    ]
    logger.info(f"Built {len(models)} cluster models ({ClusterMode(mode).value} mode)")
    return models
