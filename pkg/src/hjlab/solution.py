"""SolutionGrid: solver output on a rectangular spatial grid."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import AxisMismatch, ConfigError

PROVENANCE = ("variational", "viscosity", "closed_form", "envelope", "lax_oleinik", "initial")


@dataclass(frozen=True)
class SolutionGrid:
    """Values on the tensor grid spanned by ``axes`` at time t."""

    t: float
    axes: tuple
    values: np.ndarray
    provenance: str
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        axes = tuple(np.asarray(a, dtype=float) for a in self.axes)
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "values", vals)
        if vals.shape != tuple(len(a) for a in axes):
            raise ConfigError(f"values shape {vals.shape} does not match axes")
        if not np.all(np.isfinite(vals)):
            raise ConfigError("solution values must be finite")
        if self.provenance not in PROVENANCE:
            raise ConfigError(f"unknown provenance {self.provenance!r}")

    @property
    def dim(self):
        return len(self.axes)

    def points(self):
        """Grid nodes as an array of shape (*shape, d)."""
        return np.stack(np.meshgrid(*self.axes, indexing="ij"), axis=-1)

    def same_axes(self, other, tol=1e-12):
        return (self.dim == other.dim
                and all(a.shape == b.shape and np.allclose(a, b, atol=tol, rtol=0)
                        for a, b in zip(self.axes, other.axes)))

    def require_same_axes(self, other):
        if not self.same_axes(other):
            raise AxisMismatch("solution grids have different axes")


def grid_points(axes):
    axes = [np.asarray(a, dtype=float) for a in axes]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)


def uniform_axis(lo, hi, step):
    """Nodes lo, lo+step, ..., hi (hi included when it lies on the lattice)."""
    n = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(n)
