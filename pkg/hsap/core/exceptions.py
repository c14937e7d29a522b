from typing import Optional

import numpy as np
from pydantic import ValidationError


class HsapException(Exception):
    """Базовое исключение для HSAP"""
    def __init__(self, message: str, code: Optional[str] = None):
        self.message = message
        self.code = code
        super().__init__(self.message)


class ConfigurationError(HsapException):
    """Недопустимые флаги или комбинации параметров"""
    pass


class DataFormatError(HsapException):
    """Файл не удалось разобрать (CSV, бинарный формат, куб)"""
    pass


class DataValidationError(HsapException):
    """Данные корректны синтаксически, но непригодны для операции"""
    pass


class SecantCapExceededError(DataValidationError):
    """Полное множество секущих превышает допустимый размер"""
    pass


class EmptyCandidateSetError(DataValidationError):
    """Множество кандидатов R пусто"""
    pass


class NumericalError(HsapException):
    """Численный сбой: потеря ортонормальности, нет полного ранга"""
    pass


class StaleCandidateError(NumericalError):
    """Кандидат вычислен для другой проекции"""
    pass


EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3
EXIT_INTERNAL = 4


def is_expected_failure(exc: Exception) -> bool:
    return isinstance(exc, (HsapException, ValidationError, np.linalg.LinAlgError, OSError))


def handle_hsap_exception(exc: Exception) -> int:
    """Конвертирует исключения в коды выхода CLI (непредвиденные -> EXIT_INTERNAL)"""
    if isinstance(exc, (ConfigurationError, ValidationError)):
        return EXIT_USAGE
    if isinstance(exc, (NumericalError, np.linalg.LinAlgError)):
        return EXIT_NUMERICAL
    if isinstance(exc, (DataFormatError, DataValidationError, OSError)):
        return EXIT_DATA
    return EXIT_INTERNAL
