"""
Вспомогательные функции и константы
"""
