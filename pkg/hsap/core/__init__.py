"""
Основные компоненты приложения
"""
