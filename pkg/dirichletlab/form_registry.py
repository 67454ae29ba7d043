from typing import TYPE_CHECKING, Any, Dict, List, Mapping, Type

if TYPE_CHECKING:
    from .forms.base import EnergyForm


class FormRegistry:
    """Registry for managing all available form families, keyed by family tag."""
    def __init__(self):
        self._families: Dict[str, Type["EnergyForm"]] = {}

    def register_form(self, form_class: Type["EnergyForm"]):
        """Register a new form class under its `family` tag."""
        tag = form_class.model_fields["family"].default
        self._families[tag] = form_class

    def get_form(self, family: str) -> Type["EnergyForm"]:
        """Get a form class by family tag."""
        if family not in self._families:
            raise ValueError(f"Form family '{family}' not found. Available families: {list(self._families.keys())}")
        return self._families[family]

    def get_all_forms(self) -> Dict[str, Type["EnergyForm"]]:
        """Get all registered form classes."""
        return self._families.copy()

    def get_family_names(self) -> List[str]:
        """Get all registered family tags."""
        return list(self._families.keys())

    def create_form(self, descriptor: Mapping[str, Any]) -> "EnergyForm":
        """Build a form from a descriptor such as {"family": "quadratic_graph", "edges": [...]}."""
        if "family" not in descriptor:
            raise ValueError(f"Form descriptor has no 'family' key. Available families: {self.get_family_names()}")
        form_class = self.get_form(descriptor["family"])
        return form_class(**dict(descriptor))


# Global registry instance
form_registry = FormRegistry()


def register_form(form_class):
    """Register a new form family with the global registry."""
    form_registry.register_form(form_class)


def create_form(descriptor: Mapping[str, Any]) -> "EnergyForm":
    """Build a form from a descriptor using the global registry."""
    return form_registry.create_form(descriptor)
