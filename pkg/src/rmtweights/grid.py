"""Densities tabulated on uniform tensor grids."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .core import SpectralDomain
from .errors import ConfigurationError, DomainError, NumericError


@dataclass(frozen=True)
class GridAxis:
    """Uniform axis.  Torus axes are periodic and exclude the right endpoint."""

    lo: float
    hi: float
    count: int
    periodic: bool = False

    def __post_init__(self):
        if self.count < 2 or not self.hi > self.lo:
            raise ConfigurationError(f"degenerate grid axis {self}")

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.count, endpoint=not self.periodic)

    @property
    def step(self) -> float:
        return (self.hi - self.lo) / (self.count if self.periodic else self.count - 1)

    def weights(self) -> np.ndarray:
        w = np.full(self.count, self.step)
        if not self.periodic:
            w[0] *= 0.5
            w[-1] *= 0.5
        return w

    @classmethod
    def torus(cls, count: int) -> "GridAxis":
        return cls(-np.pi, np.pi, count, periodic=True)


@dataclass
class GridDensity:
    """Values of a function on a tensor grid.

    ``tol`` bounds the deviation of the trapezoid integral from one when
    ``normalized`` is requested; non-density grids (derivatives, signed
    weights) pass ``normalized=False``.
    """

    domain: tuple[SpectralDomain, ...]
    axes: tuple[GridAxis, ...]
    values: np.ndarray
    tol: float = 1e-3
    symmetric: bool = False
    normalized: bool = True
    stderr: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.domain = tuple(SpectralDomain(d) for d in self.domain)
        self.axes = tuple(self.axes)
        self.values = np.asarray(self.values)
        if len(self.domain) != len(self.axes):
            raise ConfigurationError("domain and axes must have the same length")
        shape = tuple(a.count for a in self.axes)
        if self.values.shape != shape:
            raise ConfigurationError(f"values shape {self.values.shape} != grid shape {shape}")
        if not np.all(np.isfinite(self.values)):
            raise NumericError("grid density has non-finite values")
        if self.normalized:
            if np.any(np.real(self.values) < -self.tol):
                raise NumericError("density grid has negative values")
            total = self.integral()
            if abs(total - 1.0) > self.tol:
                raise NumericError(f"grid integral {total:.6g} deviates from 1 by more than {self.tol}")
        if self.symmetric and not self.is_symmetric(self.tol):
            raise NumericError("grid flagged symmetric is not permutation invariant")

    @property
    def ndim(self) -> int:
        return len(self.axes)

    def mesh(self) -> np.ndarray:
        """Grid points, shape ``(*grid_shape, n)``."""
        return np.stack(np.meshgrid(*[a.points for a in self.axes], indexing="ij"), axis=-1)

    def cell_weights(self) -> np.ndarray:
        w = np.ones(())
        for a in self.axes:
            w = np.multiply.outer(w, a.weights())
        return w

    def integral(self) -> complex | float:
        val = np.sum(self.values * self.cell_weights())
        return float(val) if not np.iscomplexobj(val) else complex(val)

    def is_symmetric(self, tol: float) -> bool:
        if len({(a.lo, a.hi, a.count, a.periodic) for a in self.axes}) > 1:
            return False
        scale = max(np.max(np.abs(self.values)), 1e-300)
        for perm in itertools.permutations(range(self.ndim)):
            if np.max(np.abs(self.values - np.transpose(self.values, perm))) > tol * scale:
                return False
        return True

    def interpolate(self, points: np.ndarray) -> np.ndarray:
        """Linear interpolation at ``points`` of shape ``(..., n)``."""
        points = np.asarray(points, dtype=float)
        grids = [a.points for a in self.axes]
        vals = self.values
        for d, a in enumerate(self.axes):
            if a.periodic:
                grids[d] = np.append(grids[d], a.hi)
                vals = np.concatenate([vals, np.take(vals, [0], axis=d)], axis=d)
        pts = points.copy()
        for d, a in enumerate(self.axes):
            if a.periodic:
                pts[..., d] = (pts[..., d] - a.lo) % (a.hi - a.lo) + a.lo
            elif np.any(pts[..., d] < a.lo - 1e-12) or np.any(pts[..., d] > a.hi + 1e-12):
                raise DomainError("interpolation point outside the grid")
        f = RegularGridInterpolator(grids, vals, method="linear", bounds_error=False, fill_value=None)
        return f(pts)

    __call__ = interpolate

    @classmethod
    def from_function(
        cls,
        fn: Callable[[np.ndarray], np.ndarray],
        domain: Sequence[SpectralDomain],
        axes: Sequence[GridAxis],
        **kwargs,
    ) -> "GridDensity":
        axes = tuple(axes)
        pts = np.stack(np.meshgrid(*[a.points for a in axes], indexing="ij"), axis=-1)
        return cls(tuple(domain), axes, np.asarray(fn(pts)), **kwargs)
