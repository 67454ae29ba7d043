"""
Piecewise-linear maps of the real line fixing the origin.

A NormalContraction has every slope in [-1, 1]; it is 1-Lipschitz with
phi(0) = 0. LipschitzMap relaxes the slope bound to an arbitrary constant
and is used by the energy-norm checks.
"""
from dataclasses import dataclass
from typing import Any, Dict, Sequence, Tuple

import numpy as np

from .space import Field


@dataclass(frozen=True)
class LipschitzMap:
    """
    Piecewise-linear map with phi(0) = 0.

    `breakpoints` is strictly increasing and contains 0. `slopes` has one entry
    per interval: the left ray, each gap between breakpoints, the right ray.
    """
    breakpoints: Tuple[float, ...]
    slopes: Tuple[float, ...]
    label: str = "piecewise-linear"

    def __post_init__(self):
        breakpoints = tuple(float(b) for b in self.breakpoints)
        slopes = tuple(float(s) for s in self.slopes)
        if not breakpoints:
            raise ValueError("breakpoints must not be empty")
        if any(b >= c for b, c in zip(breakpoints, breakpoints[1:])):
            raise ValueError(f"breakpoints must be strictly increasing, got {breakpoints}")
        if 0.0 not in breakpoints:
            raise ValueError("breakpoints must contain 0")
        if len(slopes) != len(breakpoints) + 1:
            raise ValueError(f"Expected {len(breakpoints) + 1} slopes, got {len(slopes)}")
        if not all(np.isfinite(slopes)):
            raise ValueError("slopes must be finite")
        object.__setattr__(self, "breakpoints", breakpoints)
        object.__setattr__(self, "slopes", slopes)

    @property
    def lipschitz(self) -> float:
        return max(abs(s) for s in self.slopes)

    def _knot_values(self) -> np.ndarray:
        knots = np.array(self.breakpoints)
        values = np.zeros_like(knots)
        origin = self.breakpoints.index(0.0)
        for k in range(origin + 1, len(knots)):
            values[k] = values[k - 1] + self.slopes[k] * (knots[k] - knots[k - 1])
        for k in range(origin - 1, -1, -1):
            values[k] = values[k + 1] - self.slopes[k + 1] * (knots[k + 1] - knots[k])
        return values

    def __call__(self, t: Any) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        knots = np.array(self.breakpoints)
        values = self._knot_values()
        result = np.interp(t, knots, values)
        left = t < knots[0]
        right = t > knots[-1]
        result = np.where(left, values[0] + self.slopes[0] * (t - knots[0]), result)
        result = np.where(right, values[-1] + self.slopes[-1] * (t - knots[-1]), result)
        # exact at the origin regardless of interpolation rounding
        return np.where(t == 0.0, 0.0, result)

    def scaled(self, factor: float) -> "LipschitzMap":
        """Return factor * phi."""
        return LipschitzMap(
            self.breakpoints,
            tuple(factor * s for s in self.slopes),
            label=f"{factor:g}*{self.label}",
        )

    def lipschitz_excess(self, rng: np.random.Generator, n_samples: int = 1000, span: float = 10.0) -> float:
        """Largest sampled |phi(s) - phi(t)| - L|s - t|; nonpositive up to rounding."""
        s = rng.uniform(-span, span, n_samples)
        t = rng.uniform(-span, span, n_samples)
        return float(np.max(np.abs(self(s) - self(t)) - self.lipschitz * np.abs(s - t)))

    def describe(self) -> Dict[str, Any]:
        return {
            "label": self.label,
            "breakpoints": list(self.breakpoints),
            "slopes": list(self.slopes),
        }


@dataclass(frozen=True)
class NormalContraction(LipschitzMap):
    """A 1-Lipschitz piecewise-linear map with phi(0) = 0."""
    label: str = "normal-contraction"

    def __post_init__(self):
        super().__post_init__()
        for index, slope in enumerate(self.slopes):
            if not -1.0 <= slope <= 1.0:
                raise ValueError(f"slopes[{index}] = {slope} lies outside [-1, 1]")

    @classmethod
    def identity(cls) -> "NormalContraction":
        return cls((0.0,), (1.0, 1.0), label="identity")

    @classmethod
    def negation(cls) -> "NormalContraction":
        return cls((0.0,), (-1.0, -1.0), label="negation")

    @classmethod
    def unit_clamp(cls) -> "NormalContraction":
        return cls((0.0, 1.0), (0.0, 1.0, 0.0), label="unit-clamp")

    @classmethod
    def absolute(cls) -> "NormalContraction":
        return cls((0.0,), (-1.0, 1.0), label="absolute")

    @classmethod
    def positive_part(cls) -> "NormalContraction":
        return cls((0.0,), (0.0, 1.0), label="positive-part")

    @classmethod
    def canonical(cls) -> Tuple["NormalContraction", ...]:
        return (cls.identity(), cls.negation(), cls.unit_clamp(), cls.absolute(), cls.positive_part())

    @classmethod
    def random(cls, rng: np.random.Generator, n_knots: int = 6, span: float = 3.0) -> "NormalContraction":
        """Draw a random member with up to n_knots breakpoints in [-span, span]."""
        inner_knots = rng.uniform(-span, span, n_knots)
        knots = np.unique(np.append(inner_knots, 0.0))
        slopes = rng.uniform(-1.0, 1.0, len(knots) + 1)
        return cls(tuple(knots), tuple(slopes), label="random")


def apply_contraction(phi: LipschitzMap, u: Field) -> Field:
    """Pointwise composition phi(u)."""
    return phi(np.asarray(u, dtype=float))


def random_pool(rng: np.random.Generator, n_random: int) -> Sequence[NormalContraction]:
    """Canonical maps followed by n_random random members."""
    return tuple(NormalContraction.canonical()) + tuple(NormalContraction.random(rng) for _ in range(n_random))
