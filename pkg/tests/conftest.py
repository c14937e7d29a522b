"""
Общие фикстуры тестов
"""
import numpy as np
import pytest

from hsap.schemas.matrices import DataMatrix
from hsap.services.dataset import gen_synthetic


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240607)


@pytest.fixture(scope="session")
def synthetic() -> DataMatrix:
    """Две прямые по 100 точек и плоскость из 500 точек, seed 0"""
    return gen_synthetic(per_line=100, plane=500, seed=0)


def random_frame(rng: np.random.Generator, n: int, k: int) -> np.ndarray:
    """Случайная n x k матрица с ортонормальными столбцами"""
    q, _ = np.linalg.qr(rng.standard_normal((n, k)))
    return q


def random_unit(rng: np.random.Generator, n: int) -> np.ndarray:
    v = rng.standard_normal(n)
    return v / np.linalg.norm(v)
