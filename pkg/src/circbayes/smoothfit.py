"""Periodic zero-integral smoothing splines and P-splines with GCV selection.

Both estimators minimize a quadratic in the ``g`` reduced coefficients
``b`` of a spline in the periodic zero-integral space:

* smoothing spline, derivative penalty of order ``l``::

      J(b) = (1 - alpha) b' U' S_l' M S_l U b + alpha (y - C U b)' W (y - C U b)

* P-spline, difference penalty of order ``d`` on the reduced coefficients::

      J(b) = (y - C U b)' W (y - C U b) + rho b' D_d' D_d b

The minimizer solves ``G b = g_vec`` with ``G`` symmetric positive definite.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Tuple

import numpy as np
from scipy import linalg

from .errors import InputError, NumericalError, SingularSystemError
from .splinecore import (
    KnotConfig,
    PeriodicSplineZ,
    collocation_matrix,
    derivative_operator,
    difference_matrix,
    gram_matrix,
    matrix_U,
    schoenberg_whitney,
)

__all__ = [
    "FitProblem",
    "SmoothingConfig",
    "PSplineConfig",
    "FitResult",
    "assemble_G_g",
    "assemble_G_g_p",
    "solve_smoothing",
    "solve_pspline",
    "hat_matrix",
    "hat_matrix_p",
    "gcv",
    "gcv_p",
    "smoothing_functional",
    "pspline_functional",
    "optimize_alpha",
    "optimize_rho",
    "sse",
    "ALPHA_LOGIT_RANGE",
    "RHO_LOG10_RANGE",
]

log = logging.getLogger(__name__)

PD_TOL = 1e-12
ALPHA_LOGIT_RANGE = (-12.0, 12.0)
RHO_LOG10_RANGE = (-8.0, 8.0)


@dataclass(frozen=True, eq=False)
class FitProblem:
    """Data ``(x_i, y_i)`` with positive weights and the spline space to fit in.

    ``interleaved`` records whether the abscissae satisfy the Schoenberg-Whitney
    interleaving for the full basis; it is sufficient, not necessary, for a
    unique solution, which is checked on the assembled system instead.
    """

    xs: np.ndarray
    ys: np.ndarray
    knots: KnotConfig
    ws: Optional[np.ndarray] = None
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        xs = np.array(self.xs, dtype=float).ravel()
        ys = np.array(self.ys, dtype=float).ravel()
        if xs.shape != ys.shape:
            raise InputError(f"xs and ys differ in length: {xs.size} vs {ys.size}")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
            raise InputError("fit data must be finite")
        ws = np.ones_like(xs) if self.ws is None else np.array(self.ws, dtype=float).ravel()
        if ws.shape != xs.shape:
            raise InputError("weights must match the data length")
        if np.any(~(ws > 0)) or not np.all(np.isfinite(ws)):
            raise InputError("weights must be finite and strictly positive")
        if xs.size < self.knots.g + 1:
            raise InputError(f"need n >= g + 1 data points: n={xs.size}, g={self.knots.g}")
        if xs.min() < self.knots.a or xs.max() > self.knots.b:
            raise InputError(f"abscissae must lie in [{self.knots.a}, {self.knots.b}]")
        for name, arr in (("xs", xs), ("ys", ys), ("ws", ws)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.xs.size

    @cached_property
    def interleaved(self) -> bool:
        return schoenberg_whitney(self.knots, self.xs)

    @cached_property
    def C(self) -> np.ndarray:
        return collocation_matrix(self.knots, self.xs)

    @cached_property
    def U(self) -> np.ndarray:
        return matrix_U(self.knots)

    @cached_property
    def CU(self) -> np.ndarray:
        return self.C @ self.U

    @cached_property
    def data_gram(self) -> np.ndarray:
        """``U' C' W C U``."""
        A = self.CU.T @ (self.ws[:, None] * self.CU)
        return 0.5 * (A + A.T)

    @cached_property
    def data_rhs(self) -> np.ndarray:
        """``U' C' W y``."""
        return self.CU.T @ (self.ws * self.ys)

    def derivative_penalty(self, l: int) -> np.ndarray:
        """``U' S_l' M_kl S_l U`` = Gram of the ``l``-th derivative on reduced coefficients."""
        key = ("deriv", l)
        if key not in self._cache:
            S = derivative_operator(self.knots, l)
            SU = S @ self.U
            R = SU.T @ gram_matrix(self.knots, l) @ SU
            self._cache[key] = 0.5 * (R + R.T)
        return self._cache[key]

    def difference_penalty(self, d: int, cyclic: bool = False) -> np.ndarray:
        """``D_d' D_d`` on reduced coefficients."""
        key = ("diff", d, cyclic)
        if key not in self._cache:
            D = difference_matrix(self.knots.g, d, cyclic=cyclic)
            self._cache[key] = D.T @ D
        return self._cache[key]


@dataclass(frozen=True)
class SmoothingConfig:
    alpha: float
    l: int = 1

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise InputError(f"smoothing parameter alpha must lie in (0, 1), got {self.alpha}")
        if int(self.l) != self.l or self.l < 1:
            raise InputError(f"derivative order l must be a positive integer, got {self.l}")


@dataclass(frozen=True)
class PSplineConfig:
    rho: float
    d: int = 2
    cyclic: bool = False

    def __post_init__(self):
        if not self.rho > 0 or not math.isfinite(self.rho):
            raise InputError(f"penalization parameter rho must be positive, got {self.rho}")
        if int(self.d) != self.d or self.d < 1:
            raise InputError(f"difference order d must be a positive integer, got {self.d}")


@dataclass(frozen=True, eq=False)
class FitResult:
    """A fitted spline plus its selection diagnostics."""

    variant: str  # "smoothing" or "pspline"
    spline: PeriodicSplineZ
    parameter: float
    order: int
    sse: float
    gcv: float
    hat_trace: float
    fitted: np.ndarray
    cyclic: bool = False

    @property
    def degenerate(self) -> bool:
        return not math.isfinite(self.gcv)

    def to_dict(self) -> dict:
        smoothing = self.variant == "smoothing"
        out = {
            "variant": self.variant,
            "k": self.spline.knots.k,
            ("l" if smoothing else "d"): self.order,
            ("alpha" if smoothing else "rho"): self.parameter,
            "gcv": self.gcv if math.isfinite(self.gcv) else None,
            "sse": self.sse,
            "hat_trace": self.hat_trace,
            "spline": self.spline.to_dict(),
        }
        if not smoothing:
            out["cyclic"] = self.cyclic
        return out


def _check_l(p: FitProblem, l: int):
    if not 1 <= l <= p.knots.k - 1:
        raise InputError(f"derivative order l must lie in 1..{p.knots.k - 1} for degree {p.knots.k}, got {l}")


def assemble_G_g(p: FitProblem, c: SmoothingConfig) -> Tuple[np.ndarray, np.ndarray]:
    """``G = U'[(1-alpha) S' M S + alpha C' W C] U`` and ``g = alpha U' C' W y``."""
    _check_l(p, c.l)
    G = (1.0 - c.alpha) * p.derivative_penalty(c.l) + c.alpha * p.data_gram
    return G, c.alpha * p.data_rhs


def assemble_G_g_p(p: FitProblem, c: PSplineConfig) -> Tuple[np.ndarray, np.ndarray]:
    """``G_P = U' C' W C U + rho D' D`` and ``g_P = U' C' W y``.

    The difference penalty acts on the reduced coefficients directly.
    """
    G = p.data_gram + c.rho * p.difference_penalty(c.d, c.cyclic)
    return G, p.data_rhs.copy()


def _factor(G: np.ndarray):
    """Cholesky factor of ``G``; falls back to LU when the matrix is only
    numerically indefinite, and raises when it is singular."""
    scale = float(np.max(np.abs(np.diag(G)))) or 1.0
    try:
        cf = linalg.cho_factor(G, lower=True, check_finite=True)
        if np.min(np.diag(cf[0])) ** 2 >= PD_TOL * scale:
            return "chol", cf
    except linalg.LinAlgError:
        pass
    eig = np.linalg.eigvalsh(G)
    cond = math.inf if eig[0] <= 0 else float(eig[-1] / eig[0])
    if eig[0] <= PD_TOL * scale:
        raise SingularSystemError(
            f"system matrix is not positive definite (min eigenvalue {eig[0]:.3e}, "
            f"condition {cond:.3e}); the abscissae probably violate the Schoenberg-Whitney "
            "interleaving for this knot sequence"
        )
    log.warning("Cholesky failed; using pivoted LU (condition number %.3e)", cond)
    return "lu", linalg.lu_factor(G)


def _solve(fac, rhs):
    kind, f = fac
    return linalg.cho_solve(f, rhs) if kind == "chol" else linalg.lu_solve(f, rhs)


def _finish(p: FitProblem, variant, parameter, order, G, rhs, scale, cyclic=False) -> FitResult:
    fac = _factor(G)
    b = _solve(fac, rhs)
    spline = PeriodicSplineZ(p.knots, b)
    fitted = p.CU @ b
    # H = scale * C U G^{-1} U' C' W
    inner = _solve(fac, p.CU.T * p.ws[None, :])
    trace = float(scale * np.einsum("ij,ji->", p.CU, inner))
    resid = p.ys - fitted
    sse_val = float(resid @ resid)
    fitted.setflags(write=False)
    return FitResult(
        variant=variant,
        spline=spline,
        parameter=float(parameter),
        order=int(order),
        sse=sse_val,
        gcv=_gcv_value(sse_val, trace, p.n),
        hat_trace=trace,
        fitted=fitted,
        cyclic=cyclic,
    )


def _gcv_value(sse_val: float, trace: float, n: int) -> float:
    denom = 1.0 - trace / n
    if trace >= n or denom <= 0:
        return math.inf
    return sse_val / n / (denom * denom)


def solve_smoothing(p: FitProblem, c: SmoothingConfig) -> FitResult:
    G, rhs = assemble_G_g(p, c)
    return _finish(p, "smoothing", c.alpha, c.l, G, rhs, c.alpha)


def solve_pspline(p: FitProblem, c: PSplineConfig) -> FitResult:
    G, rhs = assemble_G_g_p(p, c)
    return _finish(p, "pspline", c.rho, c.d, G, rhs, 1.0, c.cyclic)


def _hat(p: FitProblem, G: np.ndarray, scale: float) -> np.ndarray:
    fac = _factor(G)
    return scale * p.CU @ _solve(fac, p.CU.T * p.ws[None, :])


def hat_matrix(p: FitProblem, c: SmoothingConfig) -> np.ndarray:
    """``H(alpha) = alpha C U G^{-1} U' C' W``."""
    G, _ = assemble_G_g(p, c)
    return _hat(p, G, c.alpha)


def hat_matrix_p(p: FitProblem, c: PSplineConfig) -> np.ndarray:
    """``H_P(rho) = C U G_P^{-1} U' C' W``."""
    G, _ = assemble_G_g_p(p, c)
    return _hat(p, G, 1.0)


def gcv(p: FitProblem, c: SmoothingConfig) -> float:
    """``(SSE / n) / (1 - tr H / n)^2``; ``inf`` flags a degenerate trace."""
    return solve_smoothing(p, c).gcv


def gcv_p(p: FitProblem, c: PSplineConfig) -> float:
    return solve_pspline(p, c).gcv


def smoothing_functional(p: FitProblem, c: SmoothingConfig, b) -> float:
    """Value of the smoothing-spline objective at reduced coefficients ``b``."""
    b = np.asarray(b, dtype=float)
    r = p.ys - p.CU @ b
    return float((1.0 - c.alpha) * b @ p.derivative_penalty(c.l) @ b + c.alpha * r @ (p.ws * r))


def pspline_functional(p: FitProblem, c: PSplineConfig, b) -> float:
    b = np.asarray(b, dtype=float)
    r = p.ys - p.CU @ b
    return float(r @ (p.ws * r) + c.rho * b @ p.difference_penalty(c.d, c.cyclic) @ b)


def sse(fit: FitResult) -> float:
    """Unweighted residual sum of squares on the scale of the fitted data."""
    return fit.sse


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def _golden(fun: Callable[[float], float], lo: float, hi: float, tol: float):
    """Golden-section minimization on ``[lo, hi]``; returns ``(x, f(x))``."""
    c = hi - _INV_PHI * (hi - lo)
    d = lo + _INV_PHI * (hi - lo)
    fc, fd = fun(c), fun(d)
    while hi - lo > tol:
        if fc <= fd:
            hi, d, fd = d, c, fc
            c = hi - _INV_PHI * (hi - lo)
            fc = fun(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _INV_PHI * (hi - lo)
            fd = fun(d)
    return (c, fc) if fc <= fd else (d, fd)


def _scan_and_refine(make_fit, grid, tol):
    fits = {}

    def objective(t):
        try:
            fit = make_fit(t)
        except (SingularSystemError, InputError):
            return math.inf
        fits[t] = fit
        return fit.gcv if math.isfinite(fit.gcv) else math.inf

    values = np.array([objective(t) for t in grid])
    finite = np.isfinite(values)
    if not finite.any():
        raise NumericalError("GCV is non-finite at every scanned parameter value")
    i = int(np.argmin(np.where(finite, values, np.inf)))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, len(grid) - 1)]
    t_best, v_best = _golden(objective, lo, hi, tol)
    if not v_best <= values[i]:
        t_best = grid[i]
    return t_best, fits[t_best]


def optimize_alpha(p: FitProblem, l: int = 1, n_grid: int = 101, tol: float = 1e-6):
    """GCV-optimal ``alpha``: scan ``n_grid`` points equally spaced in
    ``logit(alpha)`` over :data:`ALPHA_LOGIT_RANGE`, then golden-section search
    between the neighbours of the best point."""
    _check_l(p, l)
    grid = [float(t) for t in np.linspace(*ALPHA_LOGIT_RANGE, n_grid)]

    def make_fit(t):
        return solve_smoothing(p, SmoothingConfig(1.0 / (1.0 + math.exp(-t)), l))

    _, fit = _scan_and_refine(make_fit, grid, tol)
    return fit.parameter, fit


def optimize_rho(p: FitProblem, d: int = 2, cyclic: bool = False, n_grid: int = 101, tol: float = 1e-6):
    """GCV-optimal ``rho`` over ``log10(rho)`` in :data:`RHO_LOG10_RANGE`."""
    grid = [float(t) for t in np.linspace(*RHO_LOG10_RANGE, n_grid)]

    def make_fit(t):
        return solve_pspline(p, PSplineConfig(10.0**t, d, cyclic))

    _, fit = _scan_and_refine(make_fit, grid, tol)
    return fit.parameter, fit
