"""
Base class for energy forms.

Every family is a frozen pydantic model describing a convex, 2-homogeneous
energy on the points {0, ..., n-1}. Families declare which prox solver suits
them through `prox_strategy` and may expose closed-form differentials.
"""
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, ClassVar, Dict, FrozenSet, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from ..space import Field


@dataclass(frozen=True)
class LocalityStructure:
    """
    The points each term of a form reads.

    A perturbation outside a term's support leaves that term unchanged.
    `local` is True when the form is the plain sum of its terms; when False
    the terms are coupled by an outer nonlinearity.
    """
    supports: Tuple[FrozenSet[int], ...]
    local: bool

    def decouples(self, u: Field, v: Field) -> bool:
        """True when every term sees v = 0 on its support or u constant on it."""
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        for support in self.supports:
            points = sorted(support)
            if not np.any(v[points] != 0.0):
                continue
            if np.all(u[points] == u[points[0]]):
                continue
            return False
        return True

    def neighbourhood(self, points) -> FrozenSet[int]:
        """Union of all supports meeting the given points, plus the points."""
        points = frozenset(points)
        closure = set(points)
        for support in self.supports:
            if support & points:
                closure |= support
        return frozenset(closure)


class EnergyForm(BaseModel, ABC):
    """A convex, 2-homogeneous energy E on fields of a finite space."""
    model_config = ConfigDict(frozen=True, extra="forbid", arbitrary_types_allowed=True)

    prox_strategy: ClassVar[str] = "newton"
    closed_form_slopes: ClassVar[bool] = False

    @abstractmethod
    def energy(self, u: np.ndarray) -> float:
        """Evaluate E on an already validated array."""

    @abstractmethod
    def min_size(self) -> int:
        """Smallest number of points the form can act on."""

    @abstractmethod
    def locality(self, size: int) -> LocalityStructure:
        """Term supports of the form on a space with `size` points."""

    def solver_strategy(self) -> str:
        """Name of the prox solver suited to this form."""
        return self.prox_strategy

    def validate_field(self, u: Field) -> np.ndarray:
        array = np.asarray(u, dtype=float)
        if array.ndim != 1:
            raise ValueError(f"Expected a one-dimensional field, got shape {array.shape}")
        if array.shape[0] < self.min_size():
            raise ValueError(
                f"Index out of range: {type(self).__name__} reads point {self.min_size() - 1} "
                f"but the field has {array.shape[0]} entries"
            )
        return array

    def evaluate(self, u: Field) -> float:
        return self.energy(self.validate_field(u))

    def euclidean_gradient(self, u: np.ndarray) -> Optional[np.ndarray]:
        """Gradient in the unweighted pairing, or None where E is not differentiable."""
        return None

    def euclidean_hessian(self, u: np.ndarray) -> Optional[np.ndarray]:
        """A generalized Hessian in the unweighted pairing, or None."""
        return None

    def quadratic_matrix(self, size: int) -> Optional[np.ndarray]:
        """Symmetric Q with E(u) = u^T Q u, for quadratic families."""
        return None

    def one_sided_slopes(self, u: np.ndarray, v: np.ndarray) -> Optional[Tuple[float, float]]:
        """Closed-form (left, right) directional derivatives, when the family has them."""
        if not self.closed_form_slopes:
            return None
        gradient = self.euclidean_gradient(u)
        if gradient is None:
            return None
        slope = float(np.dot(gradient, v))
        return slope, slope

    def descriptor(self) -> Dict[str, Any]:
        """JSON-ready description of the form, including its family tag."""
        return self.model_dump(mode="json")
