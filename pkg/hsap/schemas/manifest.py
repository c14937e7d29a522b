"""
Схема манифеста запуска
"""
import json
from enum import Enum
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_serializer


class ParameterSource(str, Enum):
    """Откуда взято значение параметра"""
    FLAG = "flag"
    CONFIG = "config"
    DEFAULT = "default"
    SETTINGS = "settings"
    LABELS_FILE = "labels-file"


class ResolvedParameter(BaseModel):
    """Значение параметра вместе с его источником"""
    model_config = ConfigDict(frozen=True)

    value: Any = Field(..., description="Итоговое значение")
    source: ParameterSource = Field(..., description="Источник значения")

    @field_serializer("value")
    def _serialize_value(self, value: Any) -> Any:
        if isinstance(value, Enum):
            return value.value
        if isinstance(value, np.generic):
            return value.item()
        if isinstance(value, (tuple, list)):
            return [item.item() if isinstance(item, np.generic) else item for item in value]
        return value


class RunManifest(BaseModel):
    """Параметры, источники и дайджесты входов одной команды"""
    command: str = Field(..., description="Имя подкоманды")
    tool_version: str = Field(..., description="Версия hsap")
    parameters: dict[str, ResolvedParameter] = Field(default_factory=dict)
    input_digests: dict[str, str] = Field(default_factory=dict, description="SHA-256 входных файлов")
    extra: dict[str, Any] = Field(default_factory=dict, description="Дополнительные сведения (например, seed потоков)")

    def to_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), indent=2, sort_keys=True) + "\n"
