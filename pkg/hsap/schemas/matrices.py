"""
Схемы матриц и результатов разложений
"""
from enum import Enum
from typing import Any, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from hsap.core.exceptions import DataValidationError


def frozen_array(value: Any, dtype: Any = np.float64, ndim: Optional[int] = None) -> np.ndarray:
    """Копирует массив и запрещает запись, чтобы модели оставались неизменяемыми"""
    array = np.array(value, dtype=dtype, copy=True)
    if ndim is not None and array.ndim != ndim:
        raise DataValidationError(f"Expected a {ndim}-dimensional array, got shape {array.shape}", code="bad_shape")
    array.setflags(write=False)
    return array


class DataMatrix(BaseModel):
    """Набор данных D: T точек в R^n, по строкам"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    points: np.ndarray = Field(..., description="Матрица T x n, строка = точка")
    labels: Optional[np.ndarray] = Field(None, description="Целочисленные метки точек")

    @field_validator("points", mode="before")
    @classmethod
    def _validate_points(cls, value: Any) -> np.ndarray:
        points = np.array(value, dtype=np.float64, copy=True)
        if points.ndim == 1:
            points = points.reshape(1, -1)
        if points.ndim != 2 or points.shape[0] < 1 or points.shape[1] < 1:
            raise DataValidationError(f"Data matrix must be 2-D with at least one row and column, got shape {points.shape}", code="bad_shape")
        if not np.all(np.isfinite(points)):
            raise DataValidationError("Data matrix contains NaN or Inf entries", code="non_finite")
        points.setflags(write=False)
        return points

    @field_validator("labels", mode="before")
    @classmethod
    def _validate_labels(cls, value: Any) -> Optional[np.ndarray]:
        if value is None:
            return None
        return frozen_array(value, dtype=np.int64, ndim=1)

    def model_post_init(self, __context: Any) -> None:
        if self.labels is not None and self.labels.shape[0] != self.points.shape[0]:
            raise DataValidationError(
                f"Got {self.labels.shape[0]} labels for {self.points.shape[0]} points", code="label_count_mismatch"
            )

    @property
    def n_points(self) -> int:
        return int(self.points.shape[0])

    @property
    def dim(self) -> int:
        return int(self.points.shape[1])


class SubspaceMetric(str, Enum):
    """Расстояния на многообразии Грассмана"""
    ARC_LENGTH = "arc_length"
    CHORDAL = "chordal"
    PROJECTION = "projection"


class MatrixFormat(str, Enum):
    """Формат файла матрицы"""
    CSV = "csv"
    BINARY = "binary"


class Interleave(str, Enum):
    """Порядок значений в сыром гиперспектральном кубе"""
    BIP = "bip"
    BIL = "bil"
    BSQ = "bsq"


class CubeDescriptor(BaseModel):
    """Размеры гиперспектрального куба"""
    model_config = ConfigDict(frozen=True)

    height: int = Field(..., ge=1, description="Число строк пикселей")
    width: int = Field(..., ge=1, description="Число столбцов пикселей")
    bands: int = Field(..., ge=1, description="Число спектральных каналов")

    @property
    def n_pixels(self) -> int:
        return self.height * self.width

    @property
    def size(self) -> int:
        return self.height * self.width * self.bands


class SvdResult(BaseModel):
    """Разложение A = Y diag(s) Z^T"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    left_vectors: np.ndarray = Field(..., description="Y, столбцы y_i")
    singular_values: np.ndarray = Field(..., description="Невозрастающие сингулярные числа")
    right_vectors: np.ndarray = Field(..., description="Z, столбцы z_i")


class PrincipalAngleResult(BaseModel):
    """Главные углы и главные векторы двух подпространств"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    angles: np.ndarray = Field(..., description="Неубывающие углы в радианах, [0, pi/2]")
    cosines: np.ndarray = Field(..., description="Сингулярные числа A^T B, обрезанные до [0, 1]")
    u_vectors: np.ndarray = Field(..., description="Главные векторы в U (столбцы)")
    v_vectors: np.ndarray = Field(..., description="Главные векторы в V (столбцы)")


class PcaResult(BaseModel):
    """Базис PCA кластера или всего набора"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    mean: np.ndarray = Field(..., description="Среднее точек")
    basis: np.ndarray = Field(..., description="n x k ортонормальный базис")
    spectrum: np.ndarray = Field(..., description="Сингулярные числа (нулевые ниже шумового порога)")

    @property
    def dim(self) -> int:
        return int(self.basis.shape[1])
