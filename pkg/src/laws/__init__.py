"""
Pressure-law adapters package
"""

from .power import PowerSingularityLaw
from .carnahan_starling import CarnahanStarlingLaw

__all__ = ["PowerSingularityLaw", "CarnahanStarlingLaw"]
