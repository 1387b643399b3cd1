"""
Law Factory
Registry and factory for pressure-law variants
"""

from typing import Type

from .base_law import BasePressureLaw
from ..laws.power import PowerSingularityLaw
from ..laws.carnahan_starling import CarnahanStarlingLaw


class LawFactory:
    """Factory for creating pressure laws from their config specification"""

    _registry: dict[str, Type[BasePressureLaw]] = {}

    @classmethod
    def register(cls, variant: str, law_class: Type[BasePressureLaw]) -> None:
        """
        Register a pressure-law variant

        Args:
            variant: Variant tag used in configs (e.g., 'power')
            law_class: Class that inherits from BasePressureLaw
        """
        cls._registry[variant.lower()] = law_class

    @classmethod
    def _lookup(cls, variant: str) -> Type[BasePressureLaw]:
        law_class = cls._registry.get(str(variant).lower())
        if not law_class:
            raise ValueError(
                f"Law variant '{variant}' not found. "
                f"Available variants: {cls.list_laws()}"
            )
        return law_class

    @classmethod
    def create(cls, spec: dict, spline_nodes: int | None = None) -> BasePressureLaw:
        """
        Create a pressure law from a specification dictionary

        Args:
            spec: Mapping with 'variant' and the variant's parameters, e.g.
                {"variant": "power", "a": 1, "gamma": 2, "beta": 3, "rho_bar": 1}
            spline_nodes: Optional override of the potential cache size

        Returns:
            Pressure law instance

        Raises:
            ValueError: If the variant is unknown or parameters are missing
        """
        spec = dict(spec)
        law_class = cls._lookup(spec.pop("variant", ""))
        expected = law_class.get_parameter_names()
        missing = [name for name in expected if name not in spec]
        unknown = [name for name in spec if name not in expected]
        if missing or unknown:
            raise ValueError(
                f"Invalid parameters for {law_class.VARIANT} law: "
                f"missing {missing}, unknown {unknown}. Expected: {expected}"
            )
        return law_class(**spec, spline_nodes=spline_nodes)

    @classmethod
    def list_laws(cls) -> list[str]:
        """
        Get list of registered law variants

        Returns:
            List of variant tags
        """
        return list(cls._registry.keys())

    @classmethod
    def get_law_info(cls, variant: str) -> dict:
        """
        Get information about a registered law variant

        Args:
            variant: Variant tag

        Returns:
            Dictionary with variant information
        """
        law_class = cls._lookup(variant)
        return {
            "variant": law_class.VARIANT,
            "class": law_class.__name__,
            "parameters": law_class.get_parameter_names(),
            "description": (law_class.__doc__ or "No description available").strip(),
        }


LawFactory.register(PowerSingularityLaw.VARIANT, PowerSingularityLaw)
LawFactory.register(CarnahanStarlingLaw.VARIANT, CarnahanStarlingLaw)
