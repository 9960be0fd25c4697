"""Bayes-space arithmetic on gridded densities.

Densities are kept as positive values on a :class:`Grid`; their clr images
are zero-integral curves.  All integrals are weighted Riemann sums with cell
widths taken from the midpoints between neighbouring grid points, wrapping
around the interval end so the widths always add up to ``b - a``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import InputError, NumericalError

__all__ = [
    "Grid",
    "DensityCurve",
    "ClrCurve",
    "clr_transform",
    "clr_inverse",
    "perturb",
    "power",
    "bayes_inner",
    "bayes_norm",
    "bayes_dist",
    "sample_mean_clr",
    "functional_variance",
    "functional_sd",
    "mean_density",
    "curve_to_csv",
]

ZERO_INTEGRAL_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Grid:
    """Strictly increasing abscissae in ``[a, b)``."""

    a: float
    b: float
    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise InputError("a grid needs at least two points")
        if not self.a < self.b:
            raise InputError("grid interval must satisfy a < b")
        if np.any(np.diff(pts) <= 0):
            raise InputError("grid points must be strictly increasing")
        if pts[0] < self.a or pts[-1] >= self.b:
            raise InputError(f"grid points must lie in [{self.a}, {self.b})")
        pts.setflags(write=False)
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "points", pts)

    @classmethod
    def uniform(cls, m: int = 360, a: float = 0.0, b: float = 2 * math.pi, midpoints: bool = False) -> "Grid":
        """``m`` equally spaced points starting at ``a`` (or at cell midpoints)."""
        h = (b - a) / m
        offset = 0.5 * h if midpoints else 0.0
        return cls(a, b, a + offset + h * np.arange(m))

    @property
    def m(self) -> int:
        return self.points.size

    @property
    def width(self) -> float:
        return self.b - self.a

    @cached_property
    def weights(self) -> np.ndarray:
        x = self.points
        prev = np.concatenate(([x[-1] - self.width], x[:-1]))
        nxt = np.concatenate((x[1:], [x[0] + self.width]))
        w = 0.5 * (nxt - prev)
        w.setflags(write=False)
        return w

    def integrate(self, values) -> float:
        return float(self.weights @ np.asarray(values, dtype=float))

    def same_as(self, other: "Grid") -> bool:
        return (
            self is other
            or (self.a == other.a and self.b == other.b and np.array_equal(self.points, other.points))
        )


def _check_same_grid(*curves):
    first = curves[0].grid
    for c in curves[1:]:
        if not first.same_as(c.grid):
            raise InputError("curves live on different grids")


@dataclass(frozen=True, eq=False)
class DensityCurve:
    """Strictly positive density values on a grid (not necessarily normalized)."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.m,):
            raise InputError(f"expected {self.grid.m} density values, got shape {v.shape}")
        bad = np.flatnonzero(~(v > 0) | ~np.isfinite(v))
        if bad.size:
            raise InputError(
                f"density values must be finite and strictly positive; offending grid index {int(bad[0])}"
                f" (value {v[bad[0]]!r})"
            )
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def integral(self) -> float:
        return self.grid.integrate(self.values)

    def normalize(self) -> "DensityCurve":
        return DensityCurve(self.grid, self.values / self.integral())

    @classmethod
    def uniform(cls, grid: Grid) -> "DensityCurve":
        return cls(grid, np.full(grid.m, 1.0 / grid.width))


@dataclass(frozen=True, eq=False)
class ClrCurve:
    """Zero-integral curve on a grid, the clr image of a density."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        z = np.array(self.values, dtype=float)
        if z.shape != (self.grid.m,):
            raise InputError(f"expected {self.grid.m} clr values, got shape {z.shape}")
        if not np.all(np.isfinite(z)):
            raise InputError("clr values must be finite")
        scale = 1.0 + np.max(np.abs(z))
        if abs(self.grid.integrate(z)) > ZERO_INTEGRAL_TOL * scale * max(1.0, self.grid.width):
            raise InputError("clr curve must integrate to zero; use ClrCurve.project for raw values")
        z.setflags(write=False)
        object.__setattr__(self, "values", z)

    @classmethod
    def project(cls, grid: Grid, values) -> "ClrCurve":
        """Orthogonal projection of arbitrary values onto zero-integral curves."""
        v = np.asarray(values, dtype=float)
        return cls(grid, v - grid.integrate(v) / grid.width)

    def integral(self) -> float:
        return self.grid.integrate(self.values)


def clr_transform(f: DensityCurve) -> ClrCurve:
    """``ln f - (1/eta) int ln f``, with the cell-width weighted mean of ``ln f``."""
    logf = np.log(f.values)
    return ClrCurve(f.grid, logf - f.grid.integrate(logf) / f.grid.width)


def clr_inverse(z: ClrCurve) -> DensityCurve:
    """``exp(z) / int exp(z)``; the maximum is subtracted first to avoid overflow."""
    e = np.exp(z.values - np.max(z.values))
    if np.any(e == 0.0):
        span = float(np.ptp(z.values))
        raise NumericalError(f"clr values span {span:.1f}, beyond the double-precision range of exp")
    return DensityCurve(z.grid, e / z.grid.integrate(e))


def perturb(f: DensityCurve, g: DensityCurve) -> DensityCurve:
    _check_same_grid(f, g)
    # log domain keeps products of tiny or huge values representable
    return clr_inverse(ClrCurve.project(f.grid, np.log(f.values) + np.log(g.values)))


def power(alpha: float, f: DensityCurve) -> DensityCurve:
    return clr_inverse(ClrCurve.project(f.grid, float(alpha) * np.log(f.values)))


def bayes_inner(f: DensityCurve, g: DensityCurve) -> float:
    _check_same_grid(f, g)
    return f.grid.integrate(clr_transform(f).values * clr_transform(g).values)


def bayes_norm(f: DensityCurve) -> float:
    return math.sqrt(max(bayes_inner(f, f), 0.0))


def bayes_dist(f: DensityCurve, g: DensityCurve) -> float:
    _check_same_grid(f, g)
    diff = clr_transform(f).values - clr_transform(g).values
    return math.sqrt(max(f.grid.integrate(diff * diff), 0.0))


def _stack(zs: Sequence[ClrCurve]) -> np.ndarray:
    if len(zs) == 0:
        raise InputError("sample of curves is empty")
    _check_same_grid(*zs)
    return np.vstack([z.values for z in zs])


def sample_mean_clr(zs: Sequence[ClrCurve]) -> ClrCurve:
    Z = _stack(zs)
    return ClrCurve.project(zs[0].grid, Z.mean(axis=0))


def functional_variance(zs: Sequence[ClrCurve]) -> np.ndarray:
    """Pointwise variance with divisor ``n``."""
    Z = _stack(zs)
    return np.mean((Z - Z.mean(axis=0)) ** 2, axis=0)


def functional_sd(zs: Sequence[ClrCurve]) -> np.ndarray:
    return np.sqrt(functional_variance(zs))


def mean_density(fs: Sequence[DensityCurve]) -> DensityCurve:
    """Bayes-space mean, computed as ``clr^{-1}`` of the mean clr curve."""
    return clr_inverse(sample_mean_clr([clr_transform(f) for f in fs]))


def curve_to_csv(grid: Grid, values) -> str:
    """``x,value`` CSV text with LF line endings."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["x", "value"])
    for x, v in zip(grid.points, np.asarray(values, dtype=float)):
        writer.writerow([repr(float(x)), repr(float(v))])
    return buf.getvalue()
