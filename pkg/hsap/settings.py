import os
from typing import Annotated

from dotenv import load_dotenv
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

from hsap.utils.const import DEFAULT_SECANT_CAP

# Загружаем переменные окружения
load_dotenv()


class AppSettings(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="HSAP_",
        extra="ignore"
    )

    log_level: Annotated[str, Field(default="INFO")]
    secant_cap: Annotated[int, Field(default=DEFAULT_SECANT_CAP, ge=1)]
    threads: Annotated[int, Field(default_factory=lambda: os.cpu_count() or 1, ge=1)]
    default_seed: Annotated[int, Field(default=0)]
    svg_hashsalt: Annotated[str, Field(default="hsap")]
    figure_width: Annotated[float, Field(default=6.4, gt=0)]
    figure_height: Annotated[float, Field(default=4.8, gt=0)]


settings = AppSettings()
