"""
Основные сервисы: линейная алгебра, данные, секущие, кластеризация, HSAP и SAP
"""

# Экспортируем операции движка
from .hsap_engine import (
    bilipschitz_lower_bound,
    dimension_sweep,
    estimate_dimension,
    evaluate_candidates,
    init_projection,
    run_hsap,
    update_projection,
)
from .sap import sap_run, sap_step
