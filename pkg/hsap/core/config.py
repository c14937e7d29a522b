"""
Загрузка конфигурационных файлов и слияние источников параметров
"""
from pathlib import Path
from typing import Any, Mapping, Optional

from loguru import logger

from hsap.core.exceptions import ConfigurationError
from hsap.schemas.manifest import ParameterSource, ResolvedParameter
from hsap.utils.helpers import PathLike


def load_config_file(path: PathLike) -> dict[str, str]:
    """
    Читает файл вида `key = value`

    Args:
        path: Путь к конфигурации (UTF-8)

    Returns:
        dict[str, str]: Ключи с подчеркиваниями вместо дефисов и сырые значения

    Raises:
        ConfigurationError: При синтаксической ошибке или повторном ключе
    """
    values: dict[str, str] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}:{lineno}: expected 'key = value', got {raw_line!r}", code="config_syntax")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if not key:
            raise ConfigurationError(f"{path}:{lineno}: empty key", code="config_syntax")
        if key in values:
            raise ConfigurationError(f"{path}:{lineno}: duplicate key {key!r}", code="config_duplicate")
        values[key] = value
    logger.info(f"Loaded {len(values)} parameters from {path}")
    return values


def resolve_parameters(
    flag_values: Mapping[str, Any],
    file_values: Mapping[str, str],
    field_names: Mapping[str, str],
    fallbacks: Optional[Mapping[str, Any]] = None,
) -> tuple[dict[str, Any], dict[str, ResolvedParameter]]:
    """
    Сливает параметры по приоритету: флаги > файл > настройки окружения

    Значения по умолчанию самой модели сюда не попадают: модель подставит их сама,
    а манифест отметит такие поля как `default`.

    Args:
        flag_values: Значения флагов (None = флаг не задан), ключ = имя флага
        file_values: Значения из конфигурационного файла
        field_names: Отображение имени флага в имя поля модели
        fallbacks: Значения из AppSettings для незаданных параметров

    Returns:
        tuple: (явно заданные значения для модели, источники по именам полей)

    Raises:
        ConfigurationError: Если в файле есть неизвестные ключи
    """
    unknown = sorted(set(file_values) - set(field_names))
    if unknown:
        raise ConfigurationError(f"Unknown config keys: {', '.join(unknown)}", code="config_unknown_key")

    explicit: dict[str, Any] = {}
    sources: dict[str, ResolvedParameter] = {}
    for flag, field in field_names.items():
        if flag_values.get(flag) is not None:
            explicit[field] = flag_values[flag]
            sources[field] = ResolvedParameter(value=flag_values[flag], source=ParameterSource.FLAG)
        elif flag in file_values:
            explicit[field] = file_values[flag]
            sources[field] = ResolvedParameter(value=file_values[flag], source=ParameterSource.CONFIG)
        elif fallbacks and field in fallbacks:
            explicit[field] = fallbacks[field]
            sources[field] = ResolvedParameter(value=fallbacks[field], source=ParameterSource.SETTINGS)
    return explicit, sources
