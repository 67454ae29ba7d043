"""
Edge-based energies on weighted graphs.

Edges are (i, j, weight...) with 0-based endpoints; the edge difference of a
field is d = u_j - u_i.
"""
from typing import ClassVar, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import Field, field_validator

from .base import EnergyForm, LocalityStructure


def _check_edges(edges: Sequence[tuple]) -> None:
    for position, edge in enumerate(edges):
        i, j = edge[0], edge[1]
        if i < 0 or j < 0:
            raise ValueError(f"edges[{position}] has a negative endpoint")
        if i == j:
            raise ValueError(f"edges[{position}] is a self-loop on point {i}")
        for k, weight in enumerate(edge[2:]):
            if not np.isfinite(weight) or weight <= 0:
                raise ValueError(f"edges[{position}] weight #{k} must be a finite positive real, got {weight}")


def laplacian(heads: np.ndarray, tails: np.ndarray, weights: np.ndarray, size: int) -> np.ndarray:
    """Symmetric matrix L with u^T L u = sum_e weights_e (u_tail - u_head)^2."""
    matrix = np.zeros((size, size))
    np.add.at(matrix, (heads, heads), weights)
    np.add.at(matrix, (tails, tails), weights)
    np.add.at(matrix, (heads, tails), -weights)
    np.add.at(matrix, (tails, heads), -weights)
    return matrix


class GraphEdges:
    """Shared edge plumbing for the graph families."""

    def edge_arrays(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(heads, tails, weights); weights has one column per weight slot."""
        if not self.edges:
            empty = np.zeros(0, dtype=int)
            return empty, empty, np.zeros((0, self.weight_slots))
        table = np.array(self.edges, dtype=float)
        return table[:, 0].astype(int), table[:, 1].astype(int), table[:, 2:]

    def differences(self, u: np.ndarray) -> np.ndarray:
        heads, tails, _ = self.edge_arrays()
        return u[tails] - u[heads]

    def scatter(self, coefficients: np.ndarray, size: int) -> np.ndarray:
        """Pull edge coefficients c_e back to points: sum_e c_e (e_tail - e_head)."""
        heads, tails, _ = self.edge_arrays()
        result = np.zeros(size)
        np.add.at(result, tails, coefficients)
        np.add.at(result, heads, -coefficients)
        return result

    def min_size(self) -> int:
        if not self.edges:
            return 0
        return 1 + max(max(edge[0], edge[1]) for edge in self.edges)

    def locality(self, size: int) -> LocalityStructure:
        supports = tuple(frozenset((edge[0], edge[1])) for edge in self.edges)
        return LocalityStructure(supports=supports, local=self.is_local())

    def is_local(self) -> bool:
        return True

    def term_energies(self, u: np.ndarray) -> np.ndarray:
        """Per-edge contributions before any outer coupling."""
        raise NotImplementedError


class QuadraticGraph(GraphEdges, EnergyForm):
    """Classical graph Dirichlet energy E(u) = sum_e w (u_j - u_i)^2."""
    family: Literal["quadratic_graph"] = "quadratic_graph"
    edges: List[Tuple[int, int, float]] = Field(default_factory=list)

    prox_strategy: ClassVar[str] = "linear"
    closed_form_slopes: ClassVar[bool] = True
    weight_slots: ClassVar[int] = 1

    @field_validator("edges")
    @classmethod
    def _valid_edges(cls, edges):
        _check_edges(edges)
        return edges

    def term_energies(self, u: np.ndarray) -> np.ndarray:
        _, _, weights = self.edge_arrays()
        d = self.differences(u)
        return weights[:, 0] * d * d

    def energy(self, u: np.ndarray) -> float:
        return float(np.sum(self.term_energies(u)))

    def euclidean_gradient(self, u: np.ndarray) -> np.ndarray:
        _, _, weights = self.edge_arrays()
        return self.scatter(2.0 * weights[:, 0] * self.differences(u), len(u))

    def euclidean_hessian(self, u: np.ndarray) -> np.ndarray:
        return 2.0 * self.quadratic_matrix(len(u))

    def quadratic_matrix(self, size: int) -> np.ndarray:
        heads, tails, weights = self.edge_arrays()
        return laplacian(heads, tails, weights[:, 0], size)


class AnisotropicGraph(GraphEdges, EnergyForm):
    """
    Direction-dependent graph energy
    E(u) = sum_e w_plus (d_e^+)^2 + w_minus (d_e^-)^2, d_e = u_j - u_i.

    (t^+)^2 is C^1 with derivative 2 t^+, so E is C^1 everywhere and its
    slopes go through the gradient.
    """
    family: Literal["anisotropic_graph"] = "anisotropic_graph"
    edges: List[Tuple[int, int, float, float]] = Field(default_factory=list)

    prox_strategy: ClassVar[str] = "newton"
    closed_form_slopes: ClassVar[bool] = True
    weight_slots: ClassVar[int] = 2

    @field_validator("edges")
    @classmethod
    def _valid_edges(cls, edges):
        _check_edges(edges)
        return edges

    def term_energies(self, u: np.ndarray) -> np.ndarray:
        _, _, weights = self.edge_arrays()
        d = self.differences(u)
        up = np.maximum(d, 0.0)
        down = np.maximum(-d, 0.0)
        return weights[:, 0] * up * up + weights[:, 1] * down * down

    def energy(self, u: np.ndarray) -> float:
        return float(np.sum(self.term_energies(u)))

    def euclidean_gradient(self, u: np.ndarray) -> np.ndarray:
        _, _, weights = self.edge_arrays()
        d = self.differences(u)
        coefficients = 2.0 * (weights[:, 0] * np.maximum(d, 0.0) - weights[:, 1] * np.maximum(-d, 0.0))
        return self.scatter(coefficients, len(u))

    def euclidean_hessian(self, u: np.ndarray) -> np.ndarray:
        heads, tails, weights = self.edge_arrays()
        d = self.differences(u)
        # any value between the two weights is a valid generalized second derivative at d = 0
        active = np.where(d > 0, weights[:, 0], np.where(d < 0, weights[:, 1], 0.5 * (weights[:, 0] + weights[:, 1])))
        return 2.0 * laplacian(heads, tails, active, len(u))


class PowerSumSquared(GraphEdges, EnergyForm):
    """
    E(u) = (sum_e w |u_j - u_i|^q)^(2/q) with q in [1, 2].

    q = 1 is the squared weighted total variation: non-smooth wherever an
    edge difference vanishes. q = 2 coincides with QuadraticGraph. For q < 2
    the outer power couples the edges, so the form is not local.
    """
    family: Literal["power_sum_squared"] = "power_sum_squared"
    edges: List[Tuple[int, int, float]] = Field(default_factory=list)
    exponent: float = Field(default=1.0, ge=1.0, le=2.0)

    closed_form_slopes: ClassVar[bool] = True
    weight_slots: ClassVar[int] = 1

    @field_validator("edges")
    @classmethod
    def _valid_edges(cls, edges):
        _check_edges(edges)
        return edges

    def solver_strategy(self) -> str:
        if self.exponent == 1.0:
            return "split"
        if self.exponent == 2.0:
            return "linear"
        return "newton"

    def is_local(self) -> bool:
        return self.exponent == 2.0 or len(self.edges) <= 1

    def term_energies(self, u: np.ndarray) -> np.ndarray:
        _, _, weights = self.edge_arrays()
        return weights[:, 0] * np.abs(self.differences(u)) ** self.exponent

    def inner_sum(self, u: np.ndarray) -> float:
        """S(u) = sum_e w |d_e|^q."""
        return float(np.sum(self.term_energies(u)))

    def energy(self, u: np.ndarray) -> float:
        total = self.inner_sum(u)
        if self.exponent == 1.0:
            return total * total
        return total ** (2.0 / self.exponent)

    def euclidean_gradient(self, u: np.ndarray) -> Optional[np.ndarray]:
        _, _, weights = self.edge_arrays()
        d = self.differences(u)
        total = self.inner_sum(u)
        if total == 0.0:
            return np.zeros(len(u))
        if self.exponent == 1.0:
            if np.any(d == 0.0):
                return None
            return self.scatter(2.0 * total * weights[:, 0] * np.sign(d), len(u))
        q = self.exponent
        coefficients = 2.0 * total ** (2.0 / q - 1.0) * weights[:, 0] * np.abs(d) ** (q - 1.0) * np.sign(d)
        return self.scatter(coefficients, len(u))

    def euclidean_hessian(self, u: np.ndarray) -> Optional[np.ndarray]:
        heads, tails, weights = self.edge_arrays()
        size = len(u)
        if self.exponent == 2.0:
            return 2.0 * laplacian(heads, tails, weights[:, 0], size)
        if self.exponent == 1.0:
            return None
        total = self.inner_sum(u)
        if total == 0.0:
            return None
        q = self.exponent
        p = 2.0 / q
        d = self.differences(u)
        magnitude = np.maximum(np.abs(d), 1e-12 * (1.0 + np.max(np.abs(d))))
        grad_inner = self.scatter(q * weights[:, 0] * np.abs(d) ** (q - 1.0) * np.sign(d), size)
        hess_inner = laplacian(heads, tails, q * (q - 1.0) * weights[:, 0] * magnitude ** (q - 2.0), size)
        return (p * (p - 1.0) * total ** (p - 2.0)) * np.outer(grad_inner, grad_inner) + p * total ** (p - 1.0) * hess_inner

    def one_sided_slopes(self, u: np.ndarray, v: np.ndarray) -> Optional[Tuple[float, float]]:
        if self.exponent != 1.0:
            return super().one_sided_slopes(u, v)
        _, _, weights = self.edge_arrays()
        du = self.differences(u)
        dv = self.differences(v)
        total = self.inner_sum(u)
        moving = du != 0.0
        smooth_part = float(np.sum(weights[moving, 0] * np.sign(du[moving]) * dv[moving]))
        kink_part = float(np.sum(weights[~moving, 0] * np.abs(dv[~moving])))
        return 2.0 * total * (smooth_part - kink_part), 2.0 * total * (smooth_part + kink_part)

    def quadratic_matrix(self, size: int) -> Optional[np.ndarray]:
        if self.exponent != 2.0:
            return None
        heads, tails, weights = self.edge_arrays()
        return laplacian(heads, tails, weights[:, 0], size)


# Register the graph families in the global registry
from ..form_registry import register_form
register_form(QuadraticGraph)
register_form(AnisotropicGraph)
register_form(PowerSumSquared)
