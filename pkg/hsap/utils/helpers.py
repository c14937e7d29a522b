"""
Вспомогательные функции для HSAP
"""
import hashlib
import os
import tempfile
from pathlib import Path
from typing import Union

import numpy as np
from loguru import logger

PathLike = Union[str, os.PathLike]

_SEED_MASK = (1 << 64) - 1


def make_rng(*keys: int) -> np.random.Generator:
    """
    Создает генератор случайных чисел по seed и идентификаторам потока

    Args:
        keys: seed (любое 64-битное целое) и необязательные номера потоков

    Returns:
        np.random.Generator: Детерминированный генератор
    """
    entropy = [int(key) & _SEED_MASK for key in keys] or [0]
    return np.random.default_rng(entropy)


def format_float(value: float) -> str:
    """Кратчайшее представление double, восстанавливаемое без потерь"""
    return repr(float(value))


def file_sha256(path: PathLike) -> str:
    """
    Считает SHA-256 файла

    Args:
        path: Путь к файлу

    Returns:
        str: Hex-дайджест
    """
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def atomic_write_bytes(path: PathLike, payload: bytes) -> None:
    """
    Атомарно записывает файл: временный файл в той же директории + rename

    Args:
        path: Целевой путь
        payload: Содержимое
    """
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{target.name}.", suffix=".tmp", dir=target.parent)
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(payload)
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(tmp_name, target)
    except Exception:
        logger.error(f"Failed to write {target}, removing temporary file")
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def atomic_write_text(path: PathLike, text: str) -> None:
    """Атомарная запись текста в UTF-8"""
    atomic_write_bytes(path, text.encode("utf-8"))


def parse_shape(text: str, parts: int) -> tuple[int, ...]:
    """
    Разбирает размеры вида "145x145x200"

    Args:
        text: Строка с размерами
        parts: Ожидаемое число компонент

    Returns:
        tuple[int, ...]: Размеры
    """
    tokens = text.lower().replace("×", "x").split("x")
    if len(tokens) != parts:
        raise ValueError(f"Expected {parts} dimensions separated by 'x', got {text!r}")
    return tuple(int(token) for token in tokens)
