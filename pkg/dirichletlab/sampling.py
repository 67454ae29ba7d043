"""
Seeded random fields for the audit.

Lattice and truncation inequalities are often tight only on rough profiles,
so the sampler mixes smooth and non-smooth distributions.
"""
from typing import List, Optional, Tuple

import numpy as np

from .forms.base import LocalityStructure

DISTRIBUTIONS = ("gaussian", "laplace", "spikes", "piecewise")


def section_rng(seed: int, section: int) -> np.random.Generator:
    """Independent stream per audit section, so sections can be reordered or skipped."""
    return np.random.default_rng([int(seed), int(section)])


class FieldSampler:
    """Draws fields on a space with `size` points."""

    def __init__(self, size: int, rng: np.random.Generator, scale: float = 1.0):
        if size < 1:
            raise ValueError(f"size must be at least 1, got {size}")
        self.size = size
        self.rng = rng
        self.scale = scale

    def field(self, kind: Optional[str] = None) -> np.ndarray:
        kind = kind or DISTRIBUTIONS[self.rng.integers(len(DISTRIBUTIONS))]
        n = self.size
        if kind == "gaussian":
            return self.scale * self.rng.standard_normal(n)
        if kind == "laplace":
            return self.rng.laplace(0.0, self.scale, n)
        if kind == "spikes":
            values = np.zeros(n)
            count = int(self.rng.integers(1, min(n, 3) + 1))
            points = self.rng.choice(n, size=count, replace=False)
            values[points] = 3.0 * self.scale * self.rng.standard_normal(count)
            return values
        if kind == "piecewise":
            blocks = int(self.rng.integers(1, min(n, 4) + 1))
            cuts = np.sort(self.rng.choice(np.arange(1, n), size=blocks - 1, replace=False)) if blocks > 1 else []
            levels = self.scale * self.rng.standard_normal(blocks)
            return np.repeat(levels, np.diff(np.concatenate(([0], cuts, [n]))).astype(int))
        raise ValueError(f"Unknown distribution '{kind}'. Available: {list(DISTRIBUTIONS)}")

    def ordered_pair(self) -> Tuple[np.ndarray, np.ndarray]:
        """(u, v) with u >= v pointwise."""
        v = self.field()
        gap = np.abs(self.field())
        if self.rng.random() < 0.3:
            gap[self.rng.random(self.size) < 0.5] = 0.0
        return v + gap, v

    def pair(self) -> Tuple[np.ndarray, np.ndarray]:
        """Independent, ordered or shifted pairs in random proportion."""
        choice = self.rng.random()
        if choice < 0.5:
            return self.field(), self.field()
        if choice < 0.75:
            return self.ordered_pair()
        u = self.field()
        return u, u + self.field("spikes")

    def pairs(self, count: int) -> List[Tuple[np.ndarray, np.ndarray]]:
        return [self.pair() for _ in range(count)]

    def disjoint_pair(self, structure: LocalityStructure) -> Optional[Tuple[np.ndarray, np.ndarray]]:
        """
        (u, v) that decouple under `structure`: v lives on a random set B and
        u is constant on every term meeting B. Returns None when B would
        have to cover every point.
        """
        n = self.size
        for _ in range(20):
            count = int(self.rng.integers(1, max(1, n // 2) + 1))
            support = frozenset(int(i) for i in self.rng.choice(n, size=count, replace=False))
            closure = structure.neighbourhood(support)
            if len(closure) == n and self.rng.random() < 0.8:
                continue
            v = np.zeros(n)
            v[sorted(support)] = self.field("gaussian")[: len(support)]
            u = self.field()
            u[sorted(closure)] = 0.0 if self.rng.random() < 0.5 else float(self.scale * self.rng.standard_normal())
            if structure.decouples(u, v):
                return u, v
        return None

    def scalar(self, low: float, high: float) -> float:
        return float(self.rng.uniform(low, high))
