"""
Forms given by a matrix or by a caller-supplied routine.
"""
from typing import Callable, ClassVar, List, Literal, Optional

import numpy as np
from pydantic import Field, field_validator

from .base import EnergyForm, LocalityStructure

SYMMETRY_TOL = 1e-12
PSD_TOL = 1e-10


class QuadraticMatrix(EnergyForm):
    """
    E(u) = u^T Q u for a symmetric positive semi-definite Q.

    Q with nonpositive off-diagonal entries and nonnegative row sums is a
    graph Laplacian plus a killing term; those matrices are local. Any other
    Q couples its points through a single full-support term.
    """
    family: Literal["quadratic_matrix"] = "quadratic_matrix"
    matrix: List[List[float]]

    prox_strategy: ClassVar[str] = "linear"

    @field_validator("matrix")
    @classmethod
    def _valid_matrix(cls, matrix):
        size = len(matrix)
        if size < 1:
            raise ValueError("matrix must have at least one row")
        if any(len(row) != size for row in matrix):
            raise ValueError(f"matrix must be square, got {size} rows of lengths {[len(row) for row in matrix]}")
        array = np.array(matrix, dtype=float)
        if not np.all(np.isfinite(array)):
            raise ValueError("matrix entries must be finite")
        scale = 1.0 + float(np.max(np.abs(array)))
        if np.max(np.abs(array - array.T)) > SYMMETRY_TOL * scale:
            raise ValueError("matrix must be symmetric")
        if np.linalg.eigvalsh(array).min() < -PSD_TOL * scale:
            raise ValueError("matrix must be positive semi-definite")
        return matrix

    def array(self) -> np.ndarray:
        return np.array(self.matrix, dtype=float)

    def min_size(self) -> int:
        return len(self.matrix)

    def validate_field(self, u) -> np.ndarray:
        array = super().validate_field(u)
        if array.shape[0] != len(self.matrix):
            raise ValueError(f"Field has {array.shape[0]} entries but the matrix is {len(self.matrix)}x{len(self.matrix)}")
        return array

    def is_laplacian_like(self) -> bool:
        q = self.array()
        off_diagonal = q - np.diag(np.diag(q))
        tol = SYMMETRY_TOL * (1.0 + float(np.max(np.abs(q))))
        return bool(np.all(off_diagonal <= tol) and np.all(q.sum(axis=1) >= -tol))

    def locality(self, size: int) -> LocalityStructure:
        q = self.array()
        n = len(q)
        if not self.is_laplacian_like():
            return LocalityStructure(supports=(frozenset(range(n)),), local=False)
        supports = [frozenset((i, j)) for i in range(n) for j in range(i + 1, n) if q[i, j] != 0.0]
        supports += [frozenset((i,)) for i in range(n) if q[i].sum() != 0.0]
        return LocalityStructure(supports=tuple(supports), local=True)

    def energy(self, u: np.ndarray) -> float:
        return float(u @ self.array() @ u)

    def euclidean_gradient(self, u: np.ndarray) -> np.ndarray:
        return 2.0 * self.array() @ u

    def euclidean_hessian(self, u: np.ndarray) -> np.ndarray:
        return 2.0 * self.array()

    def quadratic_matrix(self, size: int) -> np.ndarray:
        return self.array()


class CustomForm(EnergyForm):
    """
    A caller-supplied energy on `size` points.

    Convexity and 2-homogeneity are claimed by the caller and audited, never
    assumed. No prox solver is available for it, so resolvent-based checks
    report an error section instead of a verdict.
    """
    family: Literal["custom"] = "custom"
    energy_fn: Callable[[np.ndarray], float] = Field(exclude=True)
    size: int = Field(ge=1)
    label: str = "custom"

    prox_strategy: ClassVar[str] = "unsupported"

    def min_size(self) -> int:
        return self.size

    def locality(self, size: int) -> LocalityStructure:
        return LocalityStructure(supports=(frozenset(range(max(size, self.size))),), local=False)

    def energy(self, u: np.ndarray) -> float:
        value = float(self.energy_fn(u))
        if not np.isfinite(value):
            raise ValueError(f"Custom form '{self.label}' returned a non-finite energy")
        return value


# Register the matrix-based families in the global registry
from ..form_registry import register_form
register_form(QuadraticMatrix)
register_form(CustomForm)
