"""
Sample grids over chart boxes.
"""
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from src.errors import DimMismatch


@dataclass(frozen=True)
class GridSpec:
    """A tensor grid of `points` nodes per axis over [lower, upper]."""

    lower: Sequence[float]
    upper: Sequence[float]
    points: int

    def __post_init__(self):
        if len(self.lower) != len(self.upper):
            raise DimMismatch("Grid bounds have different dimensions")
        if self.points < 2:
            raise ValueError(f"Grid needs at least 2 points per axis, got {self.points}")
        if any(lo >= hi for lo, hi in zip(self.lower, self.upper)):
            raise ValueError("Grid lower bounds must be below upper bounds")

    @classmethod
    def box(cls, half_width: float, dim: int, points: int) -> "GridSpec":
        return cls(tuple([-half_width] * dim), tuple([half_width] * dim), points)

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def axes(self):
        return [np.linspace(lo, hi, self.points) for lo, hi in zip(self.lower, self.upper)]

    def nodes(self) -> np.ndarray:
        """All grid nodes, shape (points**dim, dim), in C order."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([axis.ravel() for axis in mesh], axis=-1)

    def trimmed(self, margin: float) -> "GridSpec":
        """Shrink the box by `margin` on every side, keeping the node count."""
        return GridSpec(
            tuple(lo + margin for lo in self.lower),
            tuple(hi - margin for hi in self.upper),
            self.points,
        )

    def sample(self, count: Optional[int], seed: int) -> np.ndarray:
        """
        Seeded subsample of the grid nodes.

        The returned nodes keep grid order, so identical seeds give identical
        point lists.
        """
        nodes = self.nodes()
        if count is None or count >= len(nodes):
            return nodes
        rng = np.random.default_rng(seed)
        chosen = np.sort(rng.choice(len(nodes), size=count, replace=False))
        return nodes[chosen]
