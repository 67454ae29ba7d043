"""
Finite measure spaces and the fields living on them.

A field is a one-dimensional float array whose length matches the space.
Every inner product and norm is weighted by the measure of the atoms.
"""
import math
from dataclasses import dataclass
from typing import Sequence, Tuple, Union

import numpy as np

Field = np.ndarray


def as_field(values: Union[Sequence[float], np.ndarray]) -> Field:
    """Convert values to a read-only float field, rejecting non-finite entries."""
    array = np.array(values, dtype=float)
    if array.ndim != 1:
        raise ValueError(f"A field must be one-dimensional, got shape {array.shape}")
    if not np.all(np.isfinite(array)):
        raise ValueError("A field must have finite entries")
    array.setflags(write=False)
    return array


def _check_pair(u: Field, v: Field) -> None:
    if np.shape(u) != np.shape(v):
        raise ValueError(f"Dimension mismatch: {np.shape(u)} vs {np.shape(v)}")


@dataclass(frozen=True)
class MeasureSpace:
    """A finite point set X = {0, ..., size-1} with atom weights m_i > 0."""
    weights: Tuple[float, ...]

    def __post_init__(self):
        weights = tuple(float(w) for w in self.weights)
        if len(weights) < 1:
            raise ValueError("A measure space needs at least one point")
        for index, weight in enumerate(weights):
            if not math.isfinite(weight) or weight <= 0:
                raise ValueError(f"weights[{index}] must be a finite positive real, got {weight}")
        object.__setattr__(self, "weights", weights)

    @classmethod
    def uniform(cls, size: int, weight: float = 1.0) -> "MeasureSpace":
        """Create a space of `size` points with equal weights."""
        if size < 1:
            raise ValueError(f"size must be at least 1, got {size}")
        return cls(tuple([weight] * size))

    @property
    def size(self) -> int:
        return len(self.weights)

    @property
    def mass(self) -> np.ndarray:
        """Weights as a float array (a fresh copy)."""
        return np.array(self.weights, dtype=float)

    @property
    def total_mass(self) -> float:
        return float(sum(self.weights))

    def field(self, values: Union[Sequence[float], np.ndarray]) -> Field:
        """Validate values against this space and return them as a field."""
        array = as_field(values)
        if array.shape[0] != self.size:
            raise ValueError(f"Field has {array.shape[0]} entries but the space has {self.size} points")
        return array

    def zeros(self) -> Field:
        return self.field(np.zeros(self.size))

    def constant(self, value: float) -> Field:
        return self.field(np.full(self.size, float(value)))

    def indicator(self, index: int) -> Field:
        if not 0 <= index < self.size:
            raise ValueError(f"Point {index} is outside the space of size {self.size}")
        values = np.zeros(self.size)
        values[index] = 1.0
        return self.field(values)

    def coordinate_fields(self) -> Tuple[Field, ...]:
        return tuple(self.indicator(i) for i in range(self.size))


def inner(u: Field, v: Field, space: MeasureSpace) -> float:
    """Weighted scalar product sum_i m_i u_i v_i."""
    _check_pair(u, v)
    if len(u) != space.size:
        raise ValueError(f"Fields have {len(u)} entries but the space has {space.size} points")
    return float(np.dot(space.mass * np.asarray(u, dtype=float), np.asarray(v, dtype=float)))


def lp_norm(u: Field, p: float, space: MeasureSpace) -> float:
    """Weighted L^p norm; p may be math.inf."""
    if not p >= 1:
        raise ValueError(f"p must lie in [1, inf], got {p}")
    if len(u) != space.size:
        raise ValueError(f"Field has {len(u)} entries but the space has {space.size} points")
    magnitude = np.abs(np.asarray(u, dtype=float))
    if math.isinf(p):
        return float(magnitude.max())
    if p == 2:
        return math.sqrt(float(np.dot(space.mass, magnitude * magnitude)))
    return float(np.dot(space.mass, magnitude ** p) ** (1.0 / p))


def m_norm(u: Field, space: MeasureSpace) -> float:
    """The L^2(m) norm."""
    return lp_norm(u, 2, space)


def meet_join(u: Field, v: Field) -> Tuple[Field, Field]:
    """Pointwise (min, max) of two fields."""
    _check_pair(u, v)
    return np.minimum(u, v), np.maximum(u, v)


def unit_contraction(u: Field) -> Field:
    """Clamp every value into [0, 1]."""
    return np.clip(np.asarray(u, dtype=float), 0.0, 1.0)


def h_alpha(u: Field, v: Field, alpha: float) -> Field:
    """
    Move v towards u by at most alpha at every point.

    Computed as v + clamp(u - v, -alpha, alpha), which agrees branch by branch
    with the three-case truncation (v - alpha, u, v + alpha).
    """
    if not alpha >= 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    _check_pair(u, v)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if math.isinf(alpha):
        return u.copy()
    difference = u - v
    clamped = np.clip(difference, -alpha, alpha)
    # inactive clamp returns u itself so both endpoints are exact
    return np.where(clamped == difference, u, v + clamped)
