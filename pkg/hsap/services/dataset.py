"""
Сервис данных: чтение и запись матриц, синтетический набор, гиперспектральные кубы
"""
from pathlib import Path
from typing import Optional, Union

import numpy as np
from loguru import logger

from hsap.core.exceptions import ConfigurationError, DataFormatError, DataValidationError
from hsap.schemas.matrices import CubeDescriptor, DataMatrix, Interleave, MatrixFormat
from hsap.utils.const import (
    MATRIX_HEADER_DTYPE,
    MATRIX_MAGIC,
    MATRIX_PAYLOAD_DTYPE,
    MATRIX_VERSION,
    SYNTH_PER_LINE,
    SYNTH_PLANE,
    SYNTH_RANGE,
)
from hsap.utils.helpers import PathLike, atomic_write_bytes, atomic_write_text, format_float, make_rng, parse_shape


def infer_format(path: PathLike, fmt: Optional[Union[MatrixFormat, str]] = None) -> MatrixFormat:
    """Формат явно или по расширению (.csv -> csv, иначе binary)"""
    if fmt is not None:
        return MatrixFormat(fmt)
    return MatrixFormat.CSV if Path(path).suffix.lower() == ".csv" else MatrixFormat.BINARY


# === CSV ===

def _parse_csv(text: str, path: PathLike) -> np.ndarray:
    rows: list[list[float]] = []
    width: Optional[int] = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        tokens = line.split(",")
        if width is None:
            width = len(tokens)
        elif len(tokens) != width:
            raise DataFormatError(
                f"{path}:{lineno}: expected {width} values, got {len(tokens)}", code="ragged_rows"
            )
        row = []
        for column, token in enumerate(tokens, start=1):
            try:
                row.append(float(token.strip()))
            except ValueError:
                raise DataFormatError(
                    f"{path}:{lineno}:{column}: non-numeric token {token.strip()!r}", code="non_numeric_token"
                )
        rows.append(row)
    if not rows:
        raise DataFormatError(f"{path}: file contains no rows", code="empty_file")
    return np.array(rows, dtype=np.float64)


def _format_csv(array: np.ndarray) -> str:
    return "".join(",".join(format_float(value) for value in row) + "\n" for row in array)


# === Binary ===

def read_binary_matrix(path: PathLike) -> np.ndarray:
    """
    Читает бинарную матрицу HSAP (допускает 0 строк)

    Raises:
        DataFormatError: truncated_header, bad_magic, unsupported_version,
            truncated_payload, trailing_bytes
    """
    raw = Path(path).read_bytes()
    header_size = MATRIX_HEADER_DTYPE.itemsize
    if len(raw) < header_size:
        raise DataFormatError(f"{path}: header needs {header_size} bytes, file has {len(raw)}", code="truncated_header")
    header = np.frombuffer(raw, dtype=MATRIX_HEADER_DTYPE, count=1)[0]
    if bytes(header["magic"]) != MATRIX_MAGIC:
        raise DataFormatError(f"{path}: bad magic {bytes(header['magic'])!r}", code="bad_magic")
    if int(header["version"]) != MATRIX_VERSION:
        raise DataFormatError(f"{path}: unsupported version {int(header['version'])}", code="unsupported_version")

    rows, cols = int(header["rows"]), int(header["cols"])
    expected = rows * cols * MATRIX_PAYLOAD_DTYPE.itemsize
    actual = len(raw) - header_size
    if actual < expected:
        raise DataFormatError(f"{path}: payload has {actual} bytes, expected {expected}", code="truncated_payload")
    if actual > expected:
        raise DataFormatError(f"{path}: {actual - expected} unexpected trailing bytes", code="trailing_bytes")

    values = np.frombuffer(raw, dtype=MATRIX_PAYLOAD_DTYPE, count=rows * cols, offset=header_size)
    return values.astype(np.float64).reshape(rows, cols)


def encode_binary_matrix(array: np.ndarray) -> bytes:
    array = np.asarray(array, dtype=np.float64)
    header = np.zeros(1, dtype=MATRIX_HEADER_DTYPE)
    header["magic"] = MATRIX_MAGIC
    header["version"] = MATRIX_VERSION
    header["rows"], header["cols"] = array.shape
    return header.tobytes() + np.ascontiguousarray(array, dtype=MATRIX_PAYLOAD_DTYPE).tobytes()


def write_binary_matrix(array: np.ndarray, path: PathLike) -> None:
    atomic_write_bytes(path, encode_binary_matrix(array))


# === Public API ===

def load_matrix(path: PathLike, fmt: Optional[Union[MatrixFormat, str]] = None) -> DataMatrix:
    """
    Загружает набор данных

    Args:
        path: Путь к файлу
        fmt: csv или binary (по умолчанию по расширению)

    Returns:
        DataMatrix: T x n

    Raises:
        DataFormatError: Файл не разбирается
        DataValidationError: Пустая матрица или NaN/Inf
    """
    fmt = infer_format(path, fmt)
    if fmt is MatrixFormat.CSV:
        points = _parse_csv(Path(path).read_text(encoding="utf-8"), path)
    else:
        points = read_binary_matrix(path)
    matrix = DataMatrix(points=points)
    logger.info(f"Loaded {matrix.n_points}x{matrix.dim} matrix from {path} ({fmt.value})")
    return matrix


def save_matrix(matrix: Union[DataMatrix, np.ndarray], path: PathLike, fmt: Optional[Union[MatrixFormat, str]] = None) -> None:
    """
    Атомарно сохраняет матрицу (временный файл + rename)

    Args:
        matrix: DataMatrix или 2-D массив
        path: Целевой путь
        fmt: csv или binary (по умолчанию по расширению)
    """
    points = matrix.points if isinstance(matrix, DataMatrix) else np.asarray(matrix, dtype=np.float64)
    if points.ndim != 2:
        raise DataValidationError(f"Only 2-D matrices can be saved, got shape {points.shape}", code="bad_shape")
    fmt = infer_format(path, fmt)
    if fmt is MatrixFormat.CSV:
        atomic_write_text(path, _format_csv(points))
    else:
        write_binary_matrix(points, path)
    logger.debug(f"Saved {points.shape[0]}x{points.shape[1]} matrix to {path} ({fmt.value})")


# === Synthetic data ===

def descending_line(t: np.ndarray) -> np.ndarray:
    """t -> (t, -t, 1)"""
    return np.column_stack([t, -t, np.ones_like(t)])


def ascending_line(t: np.ndarray) -> np.ndarray:
    """t -> (t, t, 4)"""
    return np.column_stack([t, t, np.full_like(t, 4.0)])


def oblique_plane(t: np.ndarray, s: np.ndarray) -> np.ndarray:
    """(t, s) -> (t/2 - s, s, t - s - 3)"""
    return np.column_stack([t / 2.0 - s, s, t - s - 3.0])


def gen_synthetic(
    per_line: int = SYNTH_PER_LINE,
    plane: int = SYNTH_PLANE,
    t_range: tuple[float, float] = SYNTH_RANGE,
    s_range: Optional[tuple[float, float]] = None,
    seed: int = 0,
) -> DataMatrix:
    """
    Две прямые и плоскость в R^3, метки 1, 2, 3 по источнику

    Args:
        per_line: Точек на каждой прямой
        plane: Точек на плоскости
        t_range: Интервал параметра t
        s_range: Интервал параметра s (по умолчанию как t)
        seed: Seed генератора

    Returns:
        DataMatrix: (2 * per_line + plane) x 3 с метками
    """
    if per_line < 1 or plane < 1:
        raise ConfigurationError(f"Point counts must be positive, got per_line={per_line}, plane={plane}", code="bad_count")
    s_range = t_range if s_range is None else s_range
    for low, high in (t_range, s_range):
        if not low < high:
            raise ConfigurationError(f"Empty parameter interval [{low}, {high}]", code="bad_range")

    rng = make_rng(seed)
    first = descending_line(rng.uniform(t_range[0], t_range[1], per_line))
    second = ascending_line(rng.uniform(t_range[0], t_range[1], per_line))
    third = oblique_plane(rng.uniform(t_range[0], t_range[1], plane), rng.uniform(s_range[0], s_range[1], plane))

    points = np.vstack([first, second, third])
    labels = np.repeat([1, 2, 3], [per_line, per_line, plane])
    logger.info(f"Generated synthetic set: {points.shape[0]} points (lines {per_line}+{per_line}, plane {plane}), seed {seed}")
    return DataMatrix(points=points, labels=labels)


# === Hyperspectral cubes ===

def parse_cube_shape(text: str) -> CubeDescriptor:
    """Разбирает "HxWxB" в CubeDescriptor"""
    try:
        height, width, bands = parse_shape(text, 3)
    except ValueError as e:
        raise ConfigurationError(f"Bad cube shape {text!r}: {str(e)}", code="bad_shape")
    return CubeDescriptor(height=height, width=width, bands=bands)


def flatten_cube(raw: np.ndarray, desc: CubeDescriptor, interleave: Union[Interleave, str] = Interleave.BIP) -> DataMatrix:
    """
    Превращает куб в (height * width) x bands, пиксели в построчном порядке

    Args:
        raw: Плоский массив значений
        desc: Размеры куба
        interleave: bip (пиксель за пикселем), bil (строка за строкой), bsq (канал за каналом)

    Returns:
        DataMatrix: Спектры пикселей по строкам

    Raises:
        DataFormatError: Длина не равна height * width * bands
    """
    raw = np.asarray(raw, dtype=np.float64).ravel()
    if raw.size != desc.size:
        raise DataFormatError(
            f"Cube payload has {raw.size} values, expected {desc.height}x{desc.width}x{desc.bands} = {desc.size}",
            code="length_mismatch",
        )
    interleave = Interleave(interleave)
    h, w, b = desc.height, desc.width, desc.bands
    if interleave is Interleave.BIP:
        cube = raw.reshape(h, w, b)
    elif interleave is Interleave.BIL:
        cube = raw.reshape(h, b, w).transpose(0, 2, 1)
    else:
        cube = raw.reshape(b, h, w).transpose(1, 2, 0)
    return DataMatrix(points=cube.reshape(desc.n_pixels, b))


def load_cube(path: PathLike, desc: CubeDescriptor, interleave: Union[Interleave, str] = Interleave.BIP) -> DataMatrix:
    """Читает сырой куб (little-endian float64 без заголовка)"""
    raw = Path(path).read_bytes()
    if len(raw) % MATRIX_PAYLOAD_DTYPE.itemsize:
        raise DataFormatError(f"{path}: {len(raw)} bytes is not a whole number of doubles", code="length_mismatch")
    matrix = flatten_cube(np.frombuffer(raw, dtype=MATRIX_PAYLOAD_DTYPE), desc, interleave)
    logger.info(f"Loaded cube {desc.height}x{desc.width}x{desc.bands} ({Interleave(interleave).value}) from {path}")
    return matrix


# === Labels ===

def load_labels(path: PathLike) -> np.ndarray:
    """Одностолбцовый CSV целых меток, по строке на точку"""
    labels = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        token = line.strip()
        if not token:
            continue
        try:
            labels.append(int(token))
        except ValueError:
            raise DataFormatError(f"{path}:{lineno}: label {token!r} is not an integer", code="non_integer_label")
    if not labels:
        raise DataFormatError(f"{path}: file contains no labels", code="empty_file")
    return np.array(labels, dtype=np.int64)


def save_labels(labels: np.ndarray, path: PathLike) -> None:
    atomic_write_text(path, "".join(f"{int(label)}\n" for label in np.asarray(labels).ravel()))
