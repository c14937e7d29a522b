"""
Файлы результатов: трасса, профиль, отчет, манифест
"""
from pathlib import Path
from typing import Sequence

from loguru import logger

from hsap.core.exceptions import DataFormatError
from hsap.schemas.manifest import RunManifest
from hsap.schemas.projection import CandidateKind, RunReport, SweepPoint, TraceRecord
from hsap.utils.const import PROFILE_COLUMNS, TRACE_COLUMNS
from hsap.utils.helpers import PathLike, atomic_write_text, format_float


def _read_rows(path: PathLike, columns: tuple[str, ...]) -> list[list[str]]:
    lines = [line for line in Path(path).read_text(encoding="utf-8").splitlines() if line.strip()]
    if not lines:
        raise DataFormatError(f"{path}: file is empty", code="empty_file")
    header = tuple(token.strip() for token in lines[0].split(","))
    if header != columns:
        raise DataFormatError(f"{path}: expected header {','.join(columns)}, got {lines[0]!r}", code="bad_header")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        tokens = [token.strip() for token in line.split(",")]
        if len(tokens) != len(columns):
            raise DataFormatError(f"{path}:{lineno}: expected {len(columns)} values, got {len(tokens)}", code="ragged_rows")
        rows.append(tokens)
    return rows


def save_trace(trace: Sequence[TraceRecord], path: PathLike) -> None:
    """CSV: iteration, objective, kind, source_id"""
    lines = [",".join(TRACE_COLUMNS)]
    lines.extend(
        f"{record.iteration},{format_float(record.objective)},{record.kind.value},{record.source_id}" for record in trace
    )
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_trace(path: PathLike) -> list[TraceRecord]:
    try:
        return [
            TraceRecord(iteration=int(iteration), objective=float(objective), kind=CandidateKind(kind), source_id=int(source))
            for iteration, objective, kind, source in _read_rows(path, TRACE_COLUMNS)
        ]
    except ValueError as e:
        raise DataFormatError(f"{path}: malformed trace row: {str(e)}", code="non_numeric_token")


def save_profile(profile: Sequence[SweepPoint], path: PathLike) -> None:
    """CSV: k, final_objective"""
    lines = [",".join(PROFILE_COLUMNS)]
    lines.extend(f"{point.k},{format_float(point.final_objective)}" for point in profile)
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_profile(path: PathLike) -> list[SweepPoint]:
    try:
        return [SweepPoint(k=int(k), final_objective=float(value)) for k, value in _read_rows(path, PROFILE_COLUMNS)]
    except ValueError as e:
        raise DataFormatError(f"{path}: malformed profile row: {str(e)}", code="non_numeric_token")


def save_report(report: RunReport, path: PathLike) -> None:
    atomic_write_text(path, report.to_text())


def save_manifest(manifest: RunManifest, path: PathLike) -> None:
    atomic_write_text(path, manifest.to_json())
    logger.debug(f"Manifest written to {path}")
