"""
Схемы кластеризации и моделей кластеров
"""
from enum import Enum
from typing import Any, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from hsap.core.exceptions import DataValidationError
from hsap.schemas.matrices import frozen_array
from hsap.schemas.secants import SecantSet
from hsap.utils.const import ORTHONORMAL_TOL


class ClusterMode(str, Enum):
    """Представление секущих внутри кластера"""
    LINEAR = "linear"
    SECANTS = "secants"


class DistanceMetric(str, Enum):
    EUCLIDEAN = "euclidean"
    COSINE = "cosine"


class AnchorStrategy(str, Enum):
    RANDOM = "random"
    EXTREMAL = "extremal"


class KMeansResult(BaseModel):
    """Результат алгоритма Ллойда"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    labels: np.ndarray = Field(..., description="Метки 1..N по строкам данных")
    centroids: np.ndarray = Field(..., description="N x n центроиды")
    objective_history: list[float] = Field(default_factory=list, description="Целевая функция на каждой итерации")
    iterations: int = Field(..., ge=0, description="Число выполненных итераций")
    converged: bool = Field(..., description="Достигнута неподвижная точка назначений")


class ClusterModelParams(BaseModel):
    """Параметры построения модели одного кластера"""
    model_config = ConfigDict(frozen=True)

    energy: Optional[float] = Field(None, gt=0, le=1, description="Доля энергии для выбора k_j")
    cluster_dim: Optional[int] = Field(None, ge=1, description="Фиксированное k_j")
    max_dim: Optional[int] = Field(None, ge=0, description="Верхняя граница k_j (k - 1)")
    within_samples: Optional[int] = Field(None, ge=1, description="Число внутрикластерных секущих (None = все)")
    anchor_count: int = Field(..., ge=1, description="Размер A_j")
    anchor_strategy: AnchorStrategy = Field(AnchorStrategy.RANDOM, description="Стратегия выбора якорей")
    seed: int = Field(0, description="Основной seed")
    secant_cap: int = Field(..., ge=1, description="Предел материализации секущих")


class ClusterModel(BaseModel):
    """Представление кластера D_j для HSAP"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    index: int = Field(..., ge=1, description="Номер кластера j")
    members: np.ndarray = Field(..., description="Глобальные индексы точек кластера")
    anchors: np.ndarray = Field(..., description="Глобальные индексы якорей A_j")
    basis: Optional[np.ndarray] = Field(None, description="V_j, n x k_j (линейный режим)")
    mean: Optional[np.ndarray] = Field(None, description="Среднее кластера (линейный режим)")
    spectrum: Optional[np.ndarray] = Field(None, description="Сингулярные числа центрированного кластера")
    within_secants: Optional[SecantSet] = Field(None, description="S_j (режим секущих)")

    @field_validator("members", "anchors", mode="before")
    @classmethod
    def _validate_indices(cls, value: Any) -> np.ndarray:
        return frozen_array(value, dtype=np.int64, ndim=1)

    @field_validator("basis", mode="before")
    @classmethod
    def _validate_basis(cls, value: Any) -> Optional[np.ndarray]:
        if value is None:
            return None
        basis = frozen_array(value, ndim=2)
        if basis.shape[1]:
            error = float(np.max(np.abs(basis.T @ basis - np.eye(basis.shape[1]))))
            if error > ORTHONORMAL_TOL:
                raise DataValidationError(f"Cluster basis is not orthonormal (error {error:.2e})", code="not_orthonormal")
        return basis

    def model_post_init(self, __context: Any) -> None:
        if not 1 <= self.anchors.shape[0] <= self.members.shape[0]:
            raise DataValidationError(f"Cluster {self.index}: anchor count out of range", code="bad_anchor_count")
        if not np.all(np.isin(self.anchors, self.members)):
            raise DataValidationError(f"Cluster {self.index}: anchors must be cluster members", code="anchor_not_member")

    @property
    def dim(self) -> int:
        """k_j (0 в режиме секущих или для вырожденного кластера)"""
        return 0 if self.basis is None else int(self.basis.shape[1])

    @property
    def size(self) -> int:
        return int(self.members.shape[0])
