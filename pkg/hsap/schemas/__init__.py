"""
Схемы данных, моделей кластеров и результатов
"""
