"""
Схемы проекции: параметры запуска, кандидаты, трасса и отчет
"""
from enum import Enum
from typing import Annotated, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from hsap.schemas.clusters import AnchorStrategy, ClusterMode, ClusterModel, DistanceMetric
from hsap.schemas.secants import SecantSet
from hsap.utils.const import (
    DEFAULT_ALPHA,
    DEFAULT_ANCHORS,
    DEFAULT_SECANT_CAP,
    DEFAULT_STOP_TOL,
    DEFAULT_STOP_WINDOW,
    DEFAULT_WITHIN_SAMPLES,
    DEGENERACY_TOL,
)


class InitStrategy(str, Enum):
    """Начальная проекция P(0)"""
    PCA = "pca"
    RANDOM = "random"


class CandidateKind(str, Enum):
    """Источник минимального элемента R"""
    CLUSTER = "cluster"
    SECANT = "secant"


class HsapConfig(BaseModel):
    """Все параметры запуска HSAP"""
    model_config = ConfigDict(frozen=True, extra="forbid", use_enum_values=False)

    k: Annotated[int, Field(gt=0, description="Размерность проекции")]
    n_clusters: Annotated[int, Field(default=1, ge=1, description="Число кластеров N")]
    mode: Annotated[ClusterMode, Field(default=ClusterMode.LINEAR, description="Представление кластеров")]
    alpha: Annotated[float, Field(default=DEFAULT_ALPHA, gt=0, lt=1, description="Шаг сдвига")]
    max_iters: Annotated[int, Field(default=80, ge=0, description="Максимум итераций")]
    anchor_count: Annotated[int, Field(default=DEFAULT_ANCHORS, ge=1, description="|A_j|")]
    anchor_strategy: Annotated[AnchorStrategy, Field(default=AnchorStrategy.RANDOM)]
    energy: Annotated[Optional[float], Field(default=None, gt=0, le=1, description="Доля энергии для k_j (по умолчанию 0.95)")]
    cluster_dim: Annotated[Optional[int], Field(default=None, ge=1, description="Фиксированное k_j")]
    within_samples: Annotated[Optional[int], Field(default=None, ge=1, description="m секущих на кластер (по умолчанию 500)")]
    metric: Annotated[DistanceMetric, Field(default=DistanceMetric.EUCLIDEAN, description="Метрика k-means")]
    seed: Annotated[int, Field(default=0, description="Основной seed")]
    init: Annotated[InitStrategy, Field(default=InitStrategy.PCA)]
    init_center: Annotated[bool, Field(default=False, description="Центрировать данные перед PCA-инициализацией")]
    stop_tol: Annotated[float, Field(default=DEFAULT_STOP_TOL, ge=0, description="Порог относительного изменения (0 = выкл.)")]
    stop_window: Annotated[int, Field(default=DEFAULT_STOP_WINDOW, ge=1, description="Окно усреднения")]
    kmeans_max_iters: Annotated[int, Field(default=300, ge=1)]
    secant_cap: Annotated[int, Field(default=DEFAULT_SECANT_CAP, ge=1)]
    full_svd: Annotated[bool, Field(default=False, description="Полные SVD для всех кластеров")]
    resample_within: Annotated[bool, Field(default=False, description="Пересэмплировать S_j на каждой итерации")]
    degeneracy_tol: Annotated[float, Field(default=DEGENERACY_TOL, gt=0)]
    threads: Annotated[int, Field(default=1, ge=1, description="Потоки для оценки кандидатов")]

    @model_validator(mode="after")
    def _check_mode_parameters(self) -> "HsapConfig":
        explicit = self.model_fields_set
        if self.energy is not None and self.cluster_dim is not None:
            raise ValueError("energy and cluster_dim are mutually exclusive")
        if self.mode is ClusterMode.SECANTS and ({"energy", "cluster_dim"} & explicit):
            raise ValueError("energy/cluster_dim only apply to mode=linear")
        if self.mode is ClusterMode.LINEAR and "within_samples" in explicit:
            raise ValueError("within_samples only applies to mode=secants")
        if self.mode is ClusterMode.LINEAR and self.resample_within:
            raise ValueError("resample_within only applies to mode=secants")
        return self

    @property
    def effective_within_samples(self) -> int:
        return self.within_samples if self.within_samples is not None else DEFAULT_WITHIN_SAMPLES


class Candidate(BaseModel):
    """Кратчайший представительный вектор w и его проекция w_p"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    value: float = Field(..., ge=0, le=1, description="Минимум R")
    w: np.ndarray = Field(..., description="Единичный вектор в R^n")
    w_p: np.ndarray = Field(..., description="Проекция w в span(P)")
    kind: CandidateKind
    source_id: int = Field(..., ge=0, description="Номер кластера j или индекс секущей")


class TraceRecord(BaseModel):
    """Одна строка трассы сходимости"""
    model_config = ConfigDict(frozen=True)

    iteration: int = Field(..., ge=0)
    objective: float = Field(..., ge=0, le=1)
    kind: CandidateKind
    source_id: int = Field(..., ge=0)


class ProjectionState(BaseModel):
    """Текущая проекция P(i) и накопленная трасса"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    projection: np.ndarray = Field(..., description="n x k, ортонормальные столбцы")
    iteration: int = Field(0, ge=0)
    trace: list[TraceRecord] = Field(default_factory=list)

    def advance(self, projection: np.ndarray, record: TraceRecord) -> None:
        self.projection = projection
        self.trace.append(record)
        self.iteration += 1


class RunReport(BaseModel):
    """Итог запуска (формат key=value)"""
    model_config = ConfigDict(frozen=True)

    final_objective: float = Field(..., description="min R при P_final")
    bilipschitz_a: Optional[float] = Field(None, description="Эмпирическая нижняя константа на секущих")
    iterations_run: int = Field(..., ge=0)
    wall_time_ms: float = Field(..., ge=0)
    subspace_drift: float = Field(0.0, ge=0, description="Расстояние (длина дуги) между P(0) и P_final")
    stopped_early: bool = Field(False)
    n_clusters: int = Field(0, ge=0)
    n_secants: int = Field(0, ge=0)

    def to_text(self) -> str:
        lines = []
        for key, value in self.model_dump().items():
            if value is None:
                value = ""
            elif isinstance(value, float):
                value = repr(value)
            lines.append(f"{key}={value}")
        return "\n".join(lines) + "\n"


class HsapResult(BaseModel):
    """Результат run_hsap / sap_run"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    projection: np.ndarray = Field(..., description="P_final")
    initial_projection: np.ndarray = Field(..., description="P(0)")
    trace: list[TraceRecord] = Field(default_factory=list)
    report: RunReport
    labels: Optional[np.ndarray] = Field(None, description="Метки кластеров 1..N")
    models: list[ClusterModel] = Field(default_factory=list)
    secants: Optional[SecantSet] = Field(None, description="S~ (с S_j в режиме секущих)")


class SweepPoint(BaseModel):
    """Точка профиля размерности"""
    model_config = ConfigDict(frozen=True)

    k: int = Field(..., ge=1)
    final_objective: float = Field(..., ge=0, le=1)


class PreparedRun(BaseModel):
    """Все, что строится до цикла: метки, модели кластеров, S~"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    labels: np.ndarray = Field(..., description="Метки 1..N")
    models: list[ClusterModel] = Field(default_factory=list)
    secants: SecantSet = Field(..., description="S~ (с S_j в режиме секущих)")
