"""Function-on-scalar regression for density responses.

Each response density is represented by the reduced coefficients of its clr
spline, so the functional model becomes a multivariate linear model
``B = X Beta + E`` for the coefficient matrix ``B`` (one row per response).
Every row of ``Beta`` is again a periodic zero-integral spline, which keeps
estimates and predictions inside the clr space by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .bayes import ClrCurve, DensityCurve, Grid, clr_inverse
from .errors import InputError, NumericalError, RankDeficiencyError
from .splinecore import KnotConfig, PeriodicSplineZ, collocation_matrix, matrix_U

__all__ = [
    "RegressionDataset",
    "RegressionModel",
    "BootstrapBands",
    "fit_fos",
    "predict_clr",
    "predict_density",
    "bootstrap_bands",
    "significance_summary",
    "spline_curve",
]

DEFAULT_REPLICATES = 500
DEFAULT_LEVEL = 0.95
MAX_DISCARD_FRACTION = 0.05


def spline_curve(knots: KnotConfig, coeffs_reduced, grid: Grid) -> np.ndarray:
    """Values on ``grid`` of splines given by rows of reduced coefficients."""
    coeffs = np.atleast_2d(np.asarray(coeffs_reduced, dtype=float))
    basis = collocation_matrix(knots, grid.points) @ matrix_U(knots)
    return coeffs @ basis.T


@dataclass(frozen=True, eq=False)
class RegressionDataset:
    """Reduced spline coefficients of ``n`` responses and an ``n x (p+1)`` design."""

    coeffs: np.ndarray
    design: np.ndarray
    knots: KnotConfig

    def __post_init__(self):
        B = np.array(self.coeffs, dtype=float)
        X = np.array(self.design, dtype=float)
        if B.ndim != 2 or B.shape[1] != self.knots.g:
            raise InputError(f"coefficient matrix must be n x {self.knots.g}, got {B.shape}")
        if X.ndim != 2 or X.shape[0] != B.shape[0]:
            raise InputError("design and coefficient matrices need the same number of rows")
        if not np.allclose(X[:, 0], 1.0):
            raise InputError("the first design column must be the intercept (all ones)")
        if B.shape[0] <= X.shape[1]:
            raise InputError(f"need more responses than parameters: n={B.shape[0]}, p+1={X.shape[1]}")
        rank = np.linalg.matrix_rank(X)
        if rank < X.shape[1]:
            raise RankDeficiencyError(
                f"design matrix has rank {rank} < {X.shape[1]} columns (constant or collinear covariates)"
            )
        for name, arr in (("coeffs", B), ("design", X)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_covariates(cls, coeffs, covariates, knots: KnotConfig) -> "RegressionDataset":
        """Prepend the intercept column to an ``n`` or ``n x p`` covariate array."""
        Z = np.asarray(covariates, dtype=float)
        if Z.ndim == 1:
            Z = Z[:, None]
        return cls(coeffs, np.hstack((np.ones((Z.shape[0], 1)), Z)), knots)

    @property
    def n(self) -> int:
        return self.coeffs.shape[0]

    @property
    def n_params(self) -> int:
        return self.design.shape[1]


@dataclass(frozen=True, eq=False)
class RegressionModel:
    """Coefficient-level OLS fit; row ``j`` of ``beta`` is ``clr(beta_j)``."""

    beta: np.ndarray
    residuals: np.ndarray
    knots: KnotConfig

    @property
    def n_params(self) -> int:
        return self.beta.shape[0]

    def parameter_spline(self, j: int) -> PeriodicSplineZ:
        return PeriodicSplineZ(self.knots, self.beta[j])

    def parameter_curves(self, grid: Grid) -> np.ndarray:
        return spline_curve(self.knots, self.beta, grid)


def _ols(X: np.ndarray, B: np.ndarray) -> np.ndarray:
    # QR keeps the normal equations well conditioned for time-index covariates
    q, r = np.linalg.qr(X)
    return np.linalg.solve(r, q.T @ B)


def fit_fos(ds: RegressionDataset) -> RegressionModel:
    beta = _ols(ds.design, ds.coeffs)
    resid = ds.coeffs - ds.design @ beta
    return RegressionModel(beta, resid, ds.knots)


def _design_row(model: RegressionModel, x_new) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x_new, dtype=float))
    if x.shape != (model.n_params - 1,):
        raise InputError(f"expected {model.n_params - 1} covariate values, got {x.size}")
    return np.concatenate(([1.0], x))


def predict_clr(model: RegressionModel, x_new, grid: Grid) -> ClrCurve:
    """clr prediction ``clr(beta_0) + sum_j x_j clr(beta_j)`` on ``grid``."""
    coeffs = _design_row(model, x_new) @ model.beta
    return ClrCurve.project(grid, spline_curve(model.knots, coeffs, grid)[0])


def predict_density(model: RegressionModel, x_new, grid: Grid) -> DensityCurve:
    return clr_inverse(predict_clr(model, x_new, grid))


@dataclass(frozen=True, eq=False)
class BootstrapBands:
    """Residual-bootstrap bands for every regression parameter curve.

    ``lower``/``upper`` are pointwise percentile bands.  ``sim_lower`` and
    ``sim_upper`` are simultaneous bands over the whole grid built from the
    bootstrap distribution of the maximal standardized deviation.
    """

    grid: Grid
    estimate: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    sim_lower: np.ndarray
    sim_upper: np.ndarray
    level: float
    replicates: int
    discarded: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "grid": self.grid.points.tolist(),
            "estimate": self.estimate.tolist(),
            "lower": self.lower.tolist(),
            "upper": self.upper.tolist(),
            "simultaneous_lower": self.sim_lower.tolist(),
            "simultaneous_upper": self.sim_upper.tolist(),
            "level": self.level,
        }


def bootstrap_bands(
    model: RegressionModel,
    ds: RegressionDataset,
    replicates: int = DEFAULT_REPLICATES,
    level: float = DEFAULT_LEVEL,
    seed: int = 0,
    grid: Optional[Grid] = None,
) -> BootstrapBands:
    """Resample whole residual rows with replacement, refit, and take quantiles.

    Residual rows are inflated by ``sqrt(n / (n - p - 1))`` before resampling
    so the bootstrap error variance matches the unbiased estimate.  Replicate
    ``r`` draws from its own child of ``SeedSequence(seed)``, so the result
    does not depend on evaluation order.
    """
    if replicates < 100:
        raise InputError(f"at least 100 bootstrap replicates are required, got {replicates}")
    if not 0.0 < level < 1.0:
        raise InputError(f"band level must lie in (0, 1), got {level}")
    grid = grid or Grid.uniform(360)
    n, q = ds.n, ds.n_params
    X = ds.design
    fitted = X @ model.beta
    E = model.residuals * math.sqrt(n / (n - q))
    basis = collocation_matrix(model.knots, grid.points) @ matrix_U(model.knots)
    estimate = model.beta @ basis.T

    children = np.random.SeedSequence(int(seed)).spawn(int(replicates))
    curves = []
    discarded = 0
    for child in children:
        idx = np.random.default_rng(child).integers(0, n, size=n)
        try:
            beta_star = _ols(X, fitted + E[idx])
        except np.linalg.LinAlgError:
            beta_star = None
        if beta_star is None or not np.all(np.isfinite(beta_star)):
            discarded += 1
            continue
        curves.append(beta_star @ basis.T)
    if discarded > MAX_DISCARD_FRACTION * replicates:
        raise NumericalError(f"{discarded} of {replicates} bootstrap refits failed")
    boot = np.stack(curves)  # (R, q, m)

    tail = 0.5 * (1.0 - level)
    lower = np.quantile(boot, tail, axis=0)
    upper = np.quantile(boot, 1.0 - tail, axis=0)

    dev = boot - estimate[None]
    sd = dev.std(axis=0)
    safe = np.where(sd > 0, sd, 1.0)
    stat = np.max(np.abs(dev) / safe[None], axis=2)  # (R, q)
    crit = np.quantile(stat, level, axis=0)
    half = crit[:, None] * sd
    return BootstrapBands(
        grid=grid,
        estimate=estimate,
        lower=np.minimum(lower, upper),
        upper=np.maximum(lower, upper),
        sim_lower=estimate - half,
        sim_upper=estimate + half,
        level=float(level),
        replicates=int(replicates),
        discarded=discarded,
        seed=int(seed),
    )


def _runs(mask: np.ndarray, x: np.ndarray) -> List[List[float]]:
    out = []
    start = None
    for i, flag in enumerate(mask):
        if flag and start is None:
            start = i
        if not flag and start is not None:
            out.append([float(x[start]), float(x[i - 1])])
            start = None
    if start is not None:
        out.append([float(x[start]), float(x[-1])])
    return out


def significance_summary(bands: BootstrapBands, simultaneous: bool = True, names: Sequence[str] = ()) -> list:
    """Per parameter: does the band contain the zero function over the whole domain?

    Uses the simultaneous band by default; ``simultaneous=False`` applies the
    same rule to the pointwise band.
    """
    lo = bands.sim_lower if simultaneous else bands.lower
    hi = bands.sim_upper if simultaneous else bands.upper
    report = []
    for j in range(lo.shape[0]):
        excl = (lo[j] > 0) | (hi[j] < 0)
        report.append(
            {
                "parameter": names[j] if j < len(names) else f"beta{j}",
                "contains_zero_everywhere": not bool(excl.any()),
                "significant": bool(excl.any()),
                "band": "simultaneous" if simultaneous else "pointwise",
                "exclusion_intervals": _runs(excl, bands.grid.points),
            }
        )
    return report
