"""
Core module containing base classes, registries, errors and settings
"""

from .base_law import BasePressureLaw
from .law_factory import LawFactory

__all__ = ["BasePressureLaw", "LawFactory"]
