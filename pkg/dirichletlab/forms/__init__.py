"""
Catalog of convex, 2-homogeneous energies and their closed-form oracles.
"""
from typing import Optional, Tuple

import numpy as np

from ..space import Field, MeasureSpace
from .base import EnergyForm, LocalityStructure
from .graph_forms import AnisotropicGraph, PowerSumSquared, QuadraticGraph
from .matrix_forms import CustomForm, QuadraticMatrix


def evaluate(form: EnergyForm, u: Field) -> float:
    return form.evaluate(u)


def analytic_gradient(form: EnergyForm, u: Field, space: MeasureSpace) -> Optional[Field]:
    """
    Gradient of E in the L^2(m) pairing, or None where E has a kink at u.

    This is the Euclidean gradient divided pointwise by the atom weights.
    """
    array = form.validate_field(u)
    if array.shape[0] != space.size:
        raise ValueError(f"Field has {array.shape[0]} entries but the space has {space.size} points")
    gradient = form.euclidean_gradient(array)
    if gradient is None:
        return None
    return gradient / space.mass


def analytic_slopes(form: EnergyForm, u: Field, v: Field) -> Optional[Tuple[float, float]]:
    """Closed-form (left, right) slopes of E at u along v, or None."""
    u = form.validate_field(u)
    v = form.validate_field(v)
    if u.shape != v.shape:
        raise ValueError(f"Dimension mismatch: {u.shape} vs {v.shape}")
    return form.one_sided_slopes(u, v)


def locality_of(form: EnergyForm, size: Optional[int] = None) -> LocalityStructure:
    return form.locality(form.min_size() if size is None else size)


def bilinear(form: EnergyForm, u: Field, v: Field) -> float:
    """Polarised bilinear form u^T Q v of a quadratic family."""
    u = form.validate_field(u)
    v = form.validate_field(v)
    if u.shape != v.shape:
        raise ValueError(f"Dimension mismatch: {u.shape} vs {v.shape}")
    matrix = form.quadratic_matrix(len(u))
    if matrix is None:
        raise ValueError(f"{type(form).__name__} is not a quadratic family")
    return float(u @ matrix @ v)


__all__ = [
    "EnergyForm",
    "LocalityStructure",
    "QuadraticGraph",
    "AnisotropicGraph",
    "PowerSumSquared",
    "QuadraticMatrix",
    "CustomForm",
    "evaluate",
    "analytic_gradient",
    "analytic_slopes",
    "locality_of",
    "bilinear",
]
