"""
Детерминированные SVG-графики: сходимость, проекции, профиль размерности, карта кластеров
"""
import io
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import numpy as np
from loguru import logger
from matplotlib.figure import Figure

from hsap.core.exceptions import DataValidationError
from hsap.schemas.projection import SweepPoint, TraceRecord
from hsap.settings import settings
from hsap.utils.helpers import PathLike, atomic_write_bytes


def _new_figure() -> Figure:
    return Figure(figsize=(settings.figure_width, settings.figure_height))


def _save_svg(figure: Figure, path: PathLike) -> None:
    buffer = io.BytesIO()
    # без даты и со стабильными id, чтобы файл был побайтно воспроизводим
    with matplotlib.rc_context({"svg.hashsalt": settings.svg_hashsalt, "svg.fonttype": "path"}):
        figure.savefig(buffer, format="svg", metadata={"Date": None}, bbox_inches="tight")
    atomic_write_bytes(path, buffer.getvalue())


def plot_trace(trace: Sequence[TraceRecord], path: PathLike, title: str = "Convergence") -> int:
    """
    Значение min R по итерациям

    Returns:
        int: Число точек ломаной

    Raises:
        DataValidationError: Пустая трасса (файл не создается)
    """
    if not trace:
        raise DataValidationError("Cannot plot an empty trace", code="empty_trace")
    iterations = np.array([record.iteration for record in trace])
    objectives = np.array([record.objective for record in trace])

    figure = _new_figure()
    axes = figure.add_subplot()
    axes.plot(iterations, objectives, marker=".", linewidth=1.0)
    axes.set_xlabel("iteration")
    axes.set_ylabel("min of R")
    axes.set_title(title)
    axes.grid(True, alpha=0.3)
    _save_svg(figure, path)
    logger.info(f"Convergence plot with {objectives.size} points written to {path}")
    return int(objectives.size)


def plot_points(points: np.ndarray, path: PathLike, labels: Optional[np.ndarray] = None, title: str = "Projection") -> int:
    """
    Диаграмма рассеяния 2-D или 3-D (ортографическая проекция с фиксированным ракурсом)

    Returns:
        int: Число точек

    Raises:
        DataValidationError: Не 2 и не 3 столбца или число меток не совпадает
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] not in (2, 3):
        raise DataValidationError(f"Scatter plots need 2 or 3 columns, got shape {points.shape}", code="bad_columns")
    if labels is not None and np.asarray(labels).shape[0] != points.shape[0]:
        raise DataValidationError(f"Got {np.asarray(labels).shape[0]} labels for {points.shape[0]} points", code="label_count_mismatch")
    color_kwargs = {} if labels is None else {"c": np.asarray(labels), "cmap": "tab20"}

    figure = _new_figure()
    if points.shape[1] == 3:
        axes = figure.add_subplot(projection="3d")
        axes.set_proj_type("ortho")
        axes.view_init(elev=30, azim=-60)
        axes.scatter(points[:, 0], points[:, 1], points[:, 2], s=4, **color_kwargs)
        axes.set_zlabel("x3")
    else:
        axes = figure.add_subplot()
        axes.scatter(points[:, 0], points[:, 1], s=4, **color_kwargs)
        axes.set_aspect("equal", adjustable="datalim")
    axes.set_xlabel("x1")
    axes.set_ylabel("x2")
    axes.set_title(title)
    _save_svg(figure, path)
    logger.info(f"Scatter plot with {points.shape[0]} points written to {path}")
    return int(points.shape[0])


def plot_profile(profile: Sequence[SweepPoint], path: PathLike, threshold: Optional[float] = None) -> int:
    """Профиль k -> итоговое значение"""
    if not profile:
        raise DataValidationError("Cannot plot an empty profile", code="empty_profile")
    ks = np.array([point.k for point in profile])
    values = np.array([point.final_objective for point in profile])

    figure = _new_figure()
    axes = figure.add_subplot()
    axes.plot(ks, values, marker="o")
    if threshold is not None:
        axes.axhline(threshold, linestyle="--", color="gray", linewidth=0.8)
    axes.set_xticks(ks)
    axes.set_xlabel("k")
    axes.set_ylabel("final min of R")
    axes.set_ylim(-0.02, 1.02)
    axes.set_title("Dimension profile")
    _save_svg(figure, path)
    return int(ks.size)


def plot_label_map(labels: np.ndarray, height: int, width: int, path: PathLike) -> int:
    """
    Карта меток пикселей куба (построчный порядок)

    Returns:
        int: Число пикселей
    """
    labels = np.asarray(labels).ravel()
    if labels.size != height * width:
        raise DataValidationError(f"Got {labels.size} labels for a {height}x{width} image", code="label_count_mismatch")
    figure = _new_figure()
    axes = figure.add_subplot()
    image = axes.imshow(labels.reshape(height, width), cmap="tab20", interpolation="nearest")
    figure.colorbar(image, ax=axes, label="cluster")
    axes.set_title("Cluster map")
    axes.set_xticks([])
    axes.set_yticks([])
    _save_svg(figure, path)
    return int(labels.size)
