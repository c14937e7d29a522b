"""
Подкоманды CLI
"""
