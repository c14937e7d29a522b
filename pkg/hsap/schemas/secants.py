"""
Схема множества секущих
"""
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from hsap.core.exceptions import DataValidationError
from hsap.schemas.matrices import frozen_array
from hsap.utils.const import UNIT_NORM_TOL


class SecantSet(BaseModel):
    """
    Нормированные разности точек.

    provenance: по строке на секущую, столбцы (i, j, src_a, src_b):
    метки кластеров пары (i == j для внутрикластерных, 0 для некластеризованного
    полного множества) и глобальные индексы исходных точек.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    vectors: np.ndarray = Field(..., description="m x n, строки единичной длины")
    provenance: np.ndarray = Field(..., description="m x 4: i, j, src_a, src_b")

    @field_validator("vectors", mode="before")
    @classmethod
    def _validate_vectors(cls, value: Any) -> np.ndarray:
        vectors = frozen_array(value, ndim=2)
        if vectors.shape[0]:
            norms = np.linalg.norm(vectors, axis=1)
            worst = float(np.max(np.abs(norms - 1.0)))
            if worst > UNIT_NORM_TOL:
                raise DataValidationError(f"Secants must be unit vectors (max norm deviation {worst:.3e})", code="non_unit_secant")
        return vectors

    @field_validator("provenance", mode="before")
    @classmethod
    def _validate_provenance(cls, value: Any) -> np.ndarray:
        provenance = frozen_array(np.asarray(value, dtype=np.int64).reshape(-1, 4), dtype=np.int64, ndim=2)
        return provenance

    def model_post_init(self, __context: Any) -> None:
        if self.vectors.shape[0] != self.provenance.shape[0]:
            raise DataValidationError(
                f"Got {self.provenance.shape[0]} provenance rows for {self.vectors.shape[0]} secants",
                code="provenance_mismatch",
            )

    @classmethod
    def empty(cls, dim: int) -> "SecantSet":
        return cls(vectors=np.zeros((0, dim)), provenance=np.zeros((0, 4), dtype=np.int64))

    @property
    def count(self) -> int:
        return int(self.vectors.shape[0])

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])
