"""
HSAP - иерархическая проекция, избегающая схлопывания секущих (Hierarchical Secant-Avoidance Projection)
"""

__version__ = "1.0.0"
