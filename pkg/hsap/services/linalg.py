"""
Плотная линейная алгебра: Грам-Шмидт, SVD, PCA и главные углы
"""
from typing import Any, Optional, Union

import numpy as np
import scipy.linalg
from loguru import logger

from hsap.core.exceptions import ConfigurationError, DataValidationError, NumericalError
from hsap.schemas.matrices import PcaResult, PrincipalAngleResult, SubspaceMetric, SvdResult
from hsap.utils.const import DEFAULT_ENERGY, ENERGY_SLACK, MGS_TOL, ORTHONORMAL_TOL


def as_matrix(value: Any, name: str = "matrix") -> np.ndarray:
    """
    Приводит вход к 2-D массиву float64 с конечными элементами

    Args:
        value: Массив или вектор (вектор трактуется как столбец)
        name: Имя для сообщений об ошибке

    Returns:
        np.ndarray: Двумерный массив
    """
    matrix = np.asarray(value, dtype=np.float64)
    if matrix.ndim == 1:
        matrix = matrix.reshape(-1, 1)
    if matrix.ndim != 2:
        raise DataValidationError(f"{name} must be 2-D, got shape {matrix.shape}", code="bad_shape")
    if not np.all(np.isfinite(matrix)):
        raise DataValidationError(f"{name} contains NaN or Inf entries", code="non_finite")
    return matrix


def orthonormality_error(q: np.ndarray) -> float:
    """‖QᵀQ − I‖_max"""
    q = np.asarray(q, dtype=np.float64)
    if q.ndim != 2 or q.shape[1] == 0:
        return 0.0
    return float(np.max(np.abs(q.T @ q - np.eye(q.shape[1]))))


def require_orthonormal(q: np.ndarray, name: str, tol: float = ORTHONORMAL_TOL) -> None:
    error = orthonormality_error(q)
    if error > tol:
        raise DataValidationError(f"{name} does not have orthonormal columns (error {error:.3e})", code="not_orthonormal")


def _orthogonalize(vector: np.ndarray, accepted: list[np.ndarray], passes: int) -> np.ndarray:
    residual = vector.copy()
    for _ in range(passes):
        for q in accepted:
            residual -= (q @ residual) * q
    return residual


def mgs_orthonormalize(columns: Any, tol: float = MGS_TOL, passes: int = 2) -> np.ndarray:
    """
    Модифицированный Грам-Шмидт с повторной ортогонализацией

    Столбец, остаток которого не превышает tol, заменяется первым каноническим
    вектором e_i с остатком больше tol.

    Args:
        columns: Матрица n x m, m <= n
        tol: Порог отбраковки остатка
        passes: Число проходов ортогонализации на столбец

    Returns:
        np.ndarray: n x m с ортонормальными столбцами

    Raises:
        NumericalError: Если m > n (полного ранга не достичь)
    """
    if tol <= 0:
        raise ConfigurationError(f"MGS tolerance must be positive, got {tol}", code="bad_tolerance")
    matrix = as_matrix(columns, "columns")
    n, m = matrix.shape
    if m > n:
        raise NumericalError(f"Cannot orthonormalize {m} columns in R^{n}", code="no_full_rank_completion")

    accepted: list[np.ndarray] = []
    for index in range(m):
        residual = _orthogonalize(matrix[:, index], accepted, passes)
        norm = float(np.linalg.norm(residual))
        if norm > tol:
            accepted.append(residual / norm)
            continue

        logger.debug(f"MGS: column {index} is rank deficient (residual {norm:.3e}), completing with a canonical vector")
        for axis in range(n):
            unit = np.zeros(n)
            unit[axis] = 1.0
            residual = _orthogonalize(unit, accepted, passes)
            norm = float(np.linalg.norm(residual))
            if norm > tol:
                accepted.append(residual / norm)
                break
        else:
            raise NumericalError(f"No canonical completion found for column {index}", code="no_full_rank_completion")

    if not accepted:
        return np.zeros((n, 0))
    return np.column_stack(accepted)


def svd(a: Any) -> SvdResult:
    """
    Тонкое SVD: A = Y diag(s) Z^T

    Args:
        a: Вещественная матрица

    Returns:
        SvdResult: Y, невозрастающие s, Z

    Raises:
        NumericalError: Если ни один драйвер LAPACK не сошелся
    """
    matrix = as_matrix(a)
    rows, cols = matrix.shape
    if rows == 0 or cols == 0:
        rank = min(rows, cols)
        return SvdResult(left_vectors=np.zeros((rows, rank)), singular_values=np.zeros(rank), right_vectors=np.zeros((cols, rank)))
    try:
        y, s, zt = scipy.linalg.svd(matrix, full_matrices=False, lapack_driver="gesdd")
    except np.linalg.LinAlgError:
        logger.warning("gesdd did not converge, retrying with gesvd")
        try:
            y, s, zt = scipy.linalg.svd(matrix, full_matrices=False, lapack_driver="gesvd")
        except np.linalg.LinAlgError as e:
            logger.error(f"SVD failed: {str(e)}")
            raise NumericalError(f"SVD did not converge: {str(e)}", code="svd_failed")
    return SvdResult(left_vectors=y, singular_values=s, right_vectors=zt.T)


def singular_values(a: Any) -> np.ndarray:
    """Только сингулярные числа (невозрастающие)"""
    matrix = as_matrix(a)
    if 0 in matrix.shape:
        return np.zeros(0)
    try:
        return scipy.linalg.svdvals(matrix)
    except np.linalg.LinAlgError:
        return svd(matrix).singular_values


def smallest_singular_triplet(a: Any) -> tuple[float, np.ndarray, np.ndarray]:
    """
    Наименьшее сингулярное число и его левый/правый сингулярные векторы

    Args:
        a: Вещественная матрица p x q

    Returns:
        tuple: (sigma_min, y, z)
    """
    result = svd(a)
    if result.singular_values.shape[0] == 0:
        raise DataValidationError("Empty matrix has no singular triplet", code="empty_matrix")
    return (
        float(result.singular_values[-1]),
        result.left_vectors[:, -1].copy(),
        result.right_vectors[:, -1].copy(),
    )


def principal_angles(a: Any, b: Any) -> PrincipalAngleResult:
    """
    Главные углы между span(A) и span(B)

    cos(theta_i) = sigma_i(A^T B); для малых углов угол уточняется через синус
    ‖v_i − A A^T v_i‖, что сохраняет точность там, где arccos теряет ее.

    Args:
        a: n x p, ортонормальные столбцы
        b: n x q, ортонормальные столбцы

    Returns:
        PrincipalAngleResult: min(p, q) неубывающих углов и главные векторы

    Raises:
        DataValidationError: Неортонормальный вход или разные n
    """
    a = as_matrix(a, "A")
    b = as_matrix(b, "B")
    if a.shape[0] != b.shape[0]:
        raise DataValidationError(f"Subspaces live in different spaces: {a.shape[0]} vs {b.shape[0]}", code="dimension_mismatch")
    require_orthonormal(a, "A")
    require_orthonormal(b, "B")

    decomposition = svd(a.T @ b)
    cosines = np.clip(decomposition.singular_values, 0.0, 1.0)
    u_vectors = a @ decomposition.left_vectors
    v_vectors = b @ decomposition.right_vectors

    angles = np.arccos(cosines)
    small = cosines**2 >= 0.5
    if np.any(small):
        residual = v_vectors[:, small] - a @ (a.T @ v_vectors[:, small])
        sines = np.clip(np.linalg.norm(residual, axis=0), 0.0, 1.0)
        angles[small] = np.arcsin(sines)
    angles = np.maximum.accumulate(angles) if angles.size else angles

    return PrincipalAngleResult(angles=angles, cosines=cosines, u_vectors=u_vectors, v_vectors=v_vectors)


def subspace_distance(a: Any, b: Any, method: Union[SubspaceMetric, str] = SubspaceMetric.ARC_LENGTH) -> float:
    """
    Расстояние Грассмана по главным углам

    Args:
        a, b: Ортонормальные базисы
        method: arc_length = ‖θ‖, chordal = ‖2 sin(θ/2)‖, projection = ‖sin θ‖

    Returns:
        float: Расстояние
    """
    method = SubspaceMetric(method)
    angles = principal_angles(a, b).angles
    if method is SubspaceMetric.ARC_LENGTH:
        return float(np.linalg.norm(angles))
    if method is SubspaceMetric.CHORDAL:
        return float(np.linalg.norm(2.0 * np.sin(angles / 2.0)))
    return float(np.linalg.norm(np.sin(angles)))


def pca_basis(
    points: Any,
    k: Optional[int] = None,
    energy: Optional[float] = None,
    center: bool = True,
) -> PcaResult:
    """
    Базис PCA по строкам-точкам

    Args:
        points: T x n
        k: Фиксированная размерность
        energy: Доля энергии e из (0, 1]; по умолчанию 0.95, если k не задан
        center: Вычитать среднее (режим кластера) или нет (инициализация)

    Returns:
        PcaResult: Среднее, базис n x k и спектр с обнуленным шумом

    Raises:
        ConfigurationError: Заданы и k, и energy
        DataValidationError: k > min(n, T)
    """
    if k is not None and energy is not None:
        raise ConfigurationError("pca_basis takes either k or energy, not both", code="pca_target_conflict")
    data = as_matrix(points, "points")
    if data.shape[0] == 0:
        raise DataValidationError("PCA needs at least one point", code="empty_points")
    n_points, dim = data.shape
    if k is not None and not 0 <= k <= min(n_points, dim):
        raise DataValidationError(f"PCA dimension {k} exceeds min(n, T) = {min(n_points, dim)}", code="dim_out_of_range")
    if k is None:
        energy = DEFAULT_ENERGY if energy is None else energy
        if not 0 < energy <= 1:
            raise ConfigurationError(f"Energy fraction must lie in (0, 1], got {energy}", code="bad_energy")

    mean = data.mean(axis=0) if center else np.zeros(dim)
    decomposition = svd((data - mean).T)

    # шумовой порог относительно масштаба исходных данных
    scale = float(np.max(np.abs(data)))
    floor = max(n_points, dim) * np.finfo(np.float64).eps * scale * np.sqrt(n_points)
    spectrum = np.where(decomposition.singular_values > floor, decomposition.singular_values, 0.0)

    if k is None:
        power = spectrum**2
        total = float(power.sum())
        if total == 0.0:
            k = 0
        else:
            fractions = np.cumsum(power) / total
            k = int(np.searchsorted(fractions, energy - ENERGY_SLACK, side="left")) + 1
            k = min(k, int(np.count_nonzero(spectrum)))

    basis = decomposition.left_vectors[:, :k].copy()
    return PcaResult(mean=mean, basis=basis, spectrum=spectrum)
