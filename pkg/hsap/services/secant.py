"""
Сервис секущих: полные множества, выборки внутри кластеров, секущие между якорями
"""
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from loguru import logger

from hsap.core.exceptions import ConfigurationError, DataFormatError, DataValidationError, SecantCapExceededError
from hsap.schemas.matrices import DataMatrix
from hsap.schemas.secants import SecantSet
from hsap.services.dataset import read_binary_matrix, write_binary_matrix
from hsap.utils.const import DEFAULT_SECANT_CAP, PROVENANCE_COLUMNS, PROVENANCE_SUFFIX
from hsap.utils.helpers import PathLike, atomic_write_text, make_rng

PointsLike = Union[DataMatrix, np.ndarray]


def _points(data: PointsLike) -> np.ndarray:
    return data.points if isinstance(data, DataMatrix) else np.asarray(data, dtype=np.float64)


def secant_count(n_points: int) -> int:
    """T(T-1)/2 без материализации"""
    if n_points < 0:
        raise DataValidationError(f"Point count must be non-negative, got {n_points}", code="bad_count")
    return n_points * (n_points - 1) // 2


def _check_cap(count: int, cap: int, what: str) -> None:
    if count > cap:
        logger.error(f"Refusing to materialize {count} {what} (cap {cap})")
        raise SecantCapExceededError(
            f"{what} would need {count} secants, above the cap of {cap}; use HSAP clustering instead",
            code="secant_cap_exceeded",
        )


def canonicalize_signs(vectors: np.ndarray) -> np.ndarray:
    """Первая ненулевая координата каждой строки становится неотрицательной"""
    vectors = np.asarray(vectors, dtype=np.float64)
    if vectors.shape[0] == 0:
        return vectors.copy()
    first = np.argmax(vectors != 0, axis=1)
    signs = np.sign(vectors[np.arange(vectors.shape[0]), first])
    signs[signs == 0] = 1.0
    return vectors * signs[:, None]


def build_secant_set(differences: np.ndarray, provenance: np.ndarray) -> SecantSet:
    """
    Нормирует разности, отбрасывает нулевые, канонизирует знак и порядок

    Args:
        differences: m x n разности точек
        provenance: m x 4 (i, j, src_a, src_b)

    Returns:
        SecantSet: Упорядоченный по (i, j, src_a, src_b)
    """
    differences = np.asarray(differences, dtype=np.float64)
    provenance = np.asarray(provenance, dtype=np.int64).reshape(-1, 4)
    norms = np.linalg.norm(differences, axis=1)
    keep = norms > 0
    dropped = int(differences.shape[0] - np.count_nonzero(keep))
    if dropped:
        logger.warning(f"Dropped {dropped} zero-length secants (duplicate points)")

    vectors = canonicalize_signs(differences[keep] / norms[keep][:, None])
    provenance = provenance[keep]
    order = np.lexsort((provenance[:, 3], provenance[:, 2], provenance[:, 1], provenance[:, 0]))
    return SecantSet(vectors=vectors[order], provenance=provenance[order])


def _pair_secants(points: np.ndarray, rows_a: np.ndarray, rows_b: np.ndarray, global_index: np.ndarray, tag_i: int, tag_j: int) -> SecantSet:
    differences = points[rows_b] - points[rows_a]
    provenance = np.column_stack(
        [
            np.full(rows_a.shape[0], tag_i, dtype=np.int64),
            np.full(rows_a.shape[0], tag_j, dtype=np.int64),
            global_index[rows_a],
            global_index[rows_b],
        ]
    )
    return build_secant_set(differences.reshape(-1, points.shape[1]), provenance)


def pair_from_linear_index(index: np.ndarray, n_points: int) -> tuple[np.ndarray, np.ndarray]:
    """
    Номер пары в построчном порядке верхнего треугольника -> (a, b), a < b

    Args:
        index: Линейные номера из [0, T(T-1)/2)
        n_points: T

    Returns:
        tuple: Массивы a и b
    """
    index = np.asarray(index, dtype=np.int64)

    def row_start(row: np.ndarray) -> np.ndarray:
        return row * (2 * n_points - row - 1) // 2

    # оценка через корень, затем целочисленная поправка
    total = secant_count(n_points)
    remaining = (total - 1 - index).astype(np.float64)
    row = n_points - 2 - np.floor((np.sqrt(8.0 * remaining + 1.0) - 1.0) / 2.0).astype(np.int64)
    row = np.clip(row, 0, max(n_points - 2, 0))
    while True:
        too_far = row_start(row) > index
        if not np.any(too_far):
            break
        row[too_far] -= 1
    while True:
        behind = (row + 1 <= n_points - 2) & (row_start(row + 1) <= index)
        if not np.any(behind):
            break
        row[behind] += 1
    column = index - row_start(row) + row + 1
    return row, column


def full_secants(data: PointsLike, cap: int = DEFAULT_SECANT_CAP, indices: Optional[np.ndarray] = None, tag: int = 0) -> SecantSet:
    """
    Все секущие набора: по одной на неупорядоченную пару различных точек

    Args:
        data: T x n точки
        cap: Предел материализации
        indices: Глобальные номера строк (по умолчанию 0..T-1)
        tag: Метка кластера для provenance (0 = без кластеризации)

    Returns:
        SecantSet: Не более T(T-1)/2 секущих

    Raises:
        DataValidationError: T < 2
        SecantCapExceededError: T(T-1)/2 > cap
    """
    points = _points(data)
    n_points = points.shape[0]
    if n_points < 2:
        raise DataValidationError(f"Secants need at least 2 points, got {n_points}", code="too_few_points")
    _check_cap(secant_count(n_points), cap, "Full secant set")
    global_index = np.arange(n_points, dtype=np.int64) if indices is None else np.asarray(indices, dtype=np.int64)
    rows_a, rows_b = np.triu_indices(n_points, k=1)
    secants = _pair_secants(points, rows_a, rows_b, global_index, tag, tag)
    logger.debug(f"Full secant set: {secants.count} secants from {n_points} points")
    return secants


def cross_secants(
    data: PointsLike,
    anchors: Sequence[np.ndarray],
    cluster_ids: Optional[Sequence[int]] = None,
    cap: int = DEFAULT_SECANT_CAP,
) -> SecantSet:
    """
    Секущие между якорями разных кластеров (S~)

    Args:
        data: Все точки D
        anchors: Глобальные номера якорей A_1..A_N
        cluster_ids: Метки кластеров для provenance (по умолчанию 1..N)
        cap: Предел материализации

    Returns:
        SecantSet: sum_{i<j} |A_i| |A_j| секущих минус нулевые
    """
    points = _points(data)
    anchors = [np.asarray(anchor, dtype=np.int64) for anchor in anchors]
    cluster_ids = list(range(1, len(anchors) + 1)) if cluster_ids is None else list(cluster_ids)
    if len(cluster_ids) != len(anchors):
        raise ConfigurationError("One cluster id per anchor set is required", code="anchor_ids_mismatch")
    if any(anchor.size == 0 for anchor in anchors):
        raise DataValidationError("Anchor sets must be nonempty", code="empty_anchor_set")
    if len(anchors) < 2:
        return SecantSet.empty(points.shape[1])

    sizes = [anchor.size for anchor in anchors]
    expected = sum(sizes[i] * sizes[j] for i in range(len(sizes)) for j in range(i + 1, len(sizes)))
    _check_cap(expected, cap, "Cross-cluster secant set")

    differences, provenance = [], []
    for i in range(len(anchors)):
        for j in range(i + 1, len(anchors)):
            rows_a = np.repeat(anchors[i], anchors[j].size)
            rows_b = np.tile(anchors[j], anchors[i].size)
            differences.append(points[rows_b] - points[rows_a])
            provenance.append(
                np.column_stack(
                    [
                        np.full(rows_a.size, cluster_ids[i], dtype=np.int64),
                        np.full(rows_a.size, cluster_ids[j], dtype=np.int64),
                        rows_a,
                        rows_b,
                    ]
                )
            )
    secants = build_secant_set(np.vstack(differences), np.vstack(provenance))
    logger.debug(f"Cross-cluster secants: {secants.count} from {len(anchors)} anchor sets")
    return secants


def sample_within_secants(
    cluster: PointsLike,
    m: int,
    seed: Union[int, np.random.Generator] = 0,
    indices: Optional[np.ndarray] = None,
    cluster_id: int = 0,
    cap: int = DEFAULT_SECANT_CAP,
) -> SecantSet:
    """
    m пар кластера без возвращения (все пары, если m >= T(T-1)/2)

    Args:
        cluster: Точки кластера
        m: Размер выборки
        seed: Seed или готовый генератор
        indices: Глобальные номера строк кластера
        cluster_id: Метка кластера для provenance
        cap: Предел материализации

    Returns:
        SecantSet: Нормированные секущие S_j
    """
    points = _points(cluster)
    n_points = points.shape[0]
    if m < 1:
        raise ConfigurationError(f"Secant sample size must be positive, got {m}", code="bad_count")
    if n_points < 2:
        raise DataValidationError(f"Secants need at least 2 points, got {n_points}", code="too_few_points")
    total = secant_count(n_points)
    _, multiplicity = np.unique(points, axis=0, return_counts=True)
    distinct = total - int(np.sum(multiplicity * (multiplicity - 1) // 2))
    if m >= distinct:
        return full_secants(points, cap=cap, indices=indices, tag=cluster_id)

    _check_cap(m, cap, "Within-cluster secant sample")
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(seed)
    picks = _draw_distinct_pairs(points, m, total, rng)
    rows_a, rows_b = pair_from_linear_index(picks, n_points)
    global_index = np.arange(n_points, dtype=np.int64) if indices is None else np.asarray(indices, dtype=np.int64)
    return _pair_secants(points, rows_a, rows_b, global_index, cluster_id, cluster_id)


def _draw_distinct_pairs(points: np.ndarray, m: int, total: int, rng: np.random.Generator) -> np.ndarray:
    """Линейные номера m пар с различными точками; m меньше числа таких пар"""
    n_points = points.shape[0]
    picks = np.empty(0, dtype=np.int64)
    tried = np.empty(0, dtype=np.int64)
    while picks.size < m:
        need = m - picks.size
        if 2 * tried.size >= total:
            # пул почти исчерпан: перестановка оставшихся номеров
            batch = rng.permutation(np.setdiff1d(np.arange(total, dtype=np.int64), tried))
        else:
            batch = rng.choice(total, size=min(total, need), replace=False).astype(np.int64)
            batch = batch[~np.isin(batch, tried)]
        tried = np.concatenate([tried, batch])
        rows_a, rows_b = pair_from_linear_index(batch, n_points)
        nonzero = np.any(points[rows_a] != points[rows_b], axis=1)
        picks = np.concatenate([picks, batch[nonzero][:need]])
    return np.sort(picks)


def concat_secants(*sets: SecantSet) -> SecantSet:
    """Склеивает множества, сохраняя порядок аргументов"""
    if not sets:
        raise ConfigurationError("At least one secant set is required", code="no_secant_sets")
    return SecantSet(
        vectors=np.vstack([secants.vectors for secants in sets]),
        provenance=np.vstack([secants.provenance for secants in sets]),
    )


def provenance_path(path: PathLike) -> Path:
    return Path(f"{path}{PROVENANCE_SUFFIX}")


def save_secants(secants: SecantSet, path: PathLike) -> None:
    """Бинарная матрица секущих + CSV provenance рядом"""
    write_binary_matrix(secants.vectors, path)
    lines = [",".join(PROVENANCE_COLUMNS)]
    lines.extend(",".join(str(int(value)) for value in row) for row in secants.provenance)
    atomic_write_text(provenance_path(path), "\n".join(lines) + "\n")
    logger.debug(f"Saved {secants.count} secants to {path}")


def load_secants(path: PathLike) -> SecantSet:
    vectors = read_binary_matrix(path)
    sidecar = provenance_path(path)
    lines = [line for line in sidecar.read_text(encoding="utf-8").splitlines() if line.strip()]
    if not lines or tuple(token.strip() for token in lines[0].split(",")) != PROVENANCE_COLUMNS:
        raise DataFormatError(f"{sidecar}: expected header {','.join(PROVENANCE_COLUMNS)}", code="bad_header")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        tokens = line.split(",")
        if len(tokens) != len(PROVENANCE_COLUMNS):
            raise DataFormatError(f"{sidecar}:{lineno}: expected 4 values", code="ragged_rows")
        try:
            rows.append([int(token) for token in tokens])
        except ValueError:
            raise DataFormatError(f"{sidecar}:{lineno}: non-integer provenance", code="non_numeric_token")
    provenance = np.array(rows, dtype=np.int64).reshape(-1, 4)
    return SecantSet(vectors=vectors, provenance=provenance)
