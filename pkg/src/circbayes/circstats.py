"""Circular descriptive statistics and the von Mises distribution.

Angles are radians as stored; no compass/mathematical convention is
assumed here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bayes import DensityCurve, Grid
from .errors import InputError

__all__ = [
    "CircularSample",
    "TrigMoment",
    "trig_moment",
    "circular_variance",
    "circular_sd",
    "mean_angular_deviation",
    "bessel_i0e",
    "bessel_i1e",
    "von_mises_pdf",
    "von_mises_kde",
    "von_mises_sample",
    "DensityValidation",
    "validate_circular_density",
    "stats_report",
]

TWO_PI = 2.0 * math.pi
# below this a mean resultant vector has no direction
RESULTANT_ZERO_TOL = 1e-12
_BESSEL_SWITCH = 15.0


@dataclass(frozen=True, eq=False)
class CircularSample:
    angles: np.ndarray

    def __post_init__(self):
        th = np.array(self.angles, dtype=float).ravel()
        if th.size == 0:
            raise InputError("a circular sample needs at least one angle")
        if not np.all(np.isfinite(th)):
            raise InputError("angles must be finite")
        th = np.mod(th, TWO_PI)
        th[th >= TWO_PI] = 0.0
        th.setflags(write=False)
        object.__setattr__(self, "angles", th)

    @property
    def n(self) -> int:
        return self.angles.size


@dataclass(frozen=True)
class TrigMoment:
    """``p``-th sample trigonometric moment about the zero direction.

    ``direction`` is ``None`` when the resultant length vanishes.
    """

    p: int
    a: float
    b: float
    length: float
    direction: Optional[float]

    @property
    def defined(self) -> bool:
        return self.direction is not None


def trig_moment(s: CircularSample, p: int = 1) -> TrigMoment:
    a = float(np.mean(np.cos(p * s.angles)))
    b = float(np.mean(np.sin(p * s.angles)))
    r = min(math.hypot(a, b), 1.0)
    direction = None
    if r > RESULTANT_ZERO_TOL:
        direction = math.atan2(b, a) % TWO_PI
        if direction >= TWO_PI:  # -0.0 and tiny negatives wrap to 2 pi
            direction = 0.0
    return TrigMoment(int(p), a, b, r, direction)


def circular_variance(s: CircularSample) -> float:
    return 1.0 - trig_moment(s, 1).length


def circular_sd(s: CircularSample) -> float:
    """``sqrt(-2 log R)``; ``math.inf`` when the resultant length is zero."""
    r = trig_moment(s, 1).length
    if r <= RESULTANT_ZERO_TOL:
        return math.inf
    return math.sqrt(max(-2.0 * math.log(r), 0.0))


def mean_angular_deviation(s: CircularSample) -> float:
    return math.sqrt(2.0 * circular_variance(s))


def _series_terms_i(kappa: float, order: int) -> float:
    # sum_m (kappa/2)^(2m+order) / (m! (m+order)!)
    half = 0.5 * kappa
    term = half**order / math.factorial(order)
    total = term
    m = 0
    q = half * half
    while True:
        m += 1
        term *= q / (m * (m + order))
        total += term
        if term <= 1e-17 * total:
            return total


def _asymptotic_ie(kappa: float, order: int) -> float:
    # e^{-x} I_nu(x) ~ 1/sqrt(2 pi x) * sum_j (-1)^j a_j(nu) / x^j, truncated at the smallest term
    mu = 4.0 * order * order
    term = 1.0
    total = 1.0
    j = 0
    while j < 200:
        j += 1
        nxt = -term * (mu - (2 * j - 1) ** 2) / (j * 8.0 * kappa)
        if abs(nxt) >= abs(term) or abs(nxt) < 1e-17 * abs(total):
            if abs(nxt) < abs(term):
                total += nxt
            break
        term = nxt
        total += term
    return total / math.sqrt(TWO_PI * kappa)


def bessel_i0e(kappa: float) -> float:
    """Exponentially scaled modified Bessel function ``exp(-kappa) I_0(kappa)``."""
    kappa = abs(float(kappa))
    if kappa <= _BESSEL_SWITCH:
        return _series_terms_i(kappa, 0) * math.exp(-kappa)
    return _asymptotic_ie(kappa, 0)


def bessel_i1e(kappa: float) -> float:
    """Exponentially scaled ``exp(-kappa) I_1(kappa)``."""
    x = float(kappa)
    kappa = abs(x)
    if kappa <= _BESSEL_SWITCH:
        val = _series_terms_i(kappa, 1) * math.exp(-kappa)
    else:
        val = _asymptotic_ie(kappa, 1)
    return math.copysign(val, x) if x else 0.0


def von_mises_pdf(theta, mu: float, kappa: float):
    """``exp(kappa cos(theta - mu)) / (2 pi I_0(kappa))``, evaluated in scaled form."""
    if kappa < 0:
        raise InputError(f"von Mises concentration must be >= 0, got {kappa}")
    th = np.asarray(theta, dtype=float)
    out = np.exp(kappa * (np.cos(th - mu) - 1.0)) / (TWO_PI * bessel_i0e(kappa))
    return float(out) if th.ndim == 0 else out


def von_mises_kde(s: CircularSample, kappa: float, grid: Grid) -> DensityCurve:
    """Equal-weight mixture of von Mises kernels with concentration ``kappa``."""
    if not kappa > 0:
        raise InputError(f"KDE concentration must be > 0, got {kappa}")
    diff = grid.points[:, None] - s.angles[None, :]
    vals = np.exp(kappa * (np.cos(diff) - 1.0)).mean(axis=1) / (TWO_PI * bessel_i0e(kappa))
    return DensityCurve(grid, vals)


def von_mises_sample(seed: int, mu: float, kappa: float, n: int) -> CircularSample:
    """Best-Fisher rejection sampler; reproducible for a fixed seed."""
    if kappa < 0 or n < 1:
        raise InputError("von Mises sampling needs kappa >= 0 and n >= 1")
    rng = np.random.default_rng(seed)
    if kappa < 1e-8:
        return CircularSample(rng.uniform(0.0, TWO_PI, n))
    tau = 1.0 + math.sqrt(1.0 + 4.0 * kappa * kappa)
    rho = (tau - math.sqrt(2.0 * tau)) / (2.0 * kappa)
    r = (1.0 + rho * rho) / (2.0 * rho)
    out = np.empty(n)
    filled = 0
    while filled < n:
        m = max(2 * (n - filled), 16)
        u1, u2, u3 = rng.random((3, m))
        z = np.cos(math.pi * u1)
        f = (1.0 + r * z) / (r + z)
        c = kappa * (r - f)
        ok = (c * (2.0 - c) - u2 > 0) | (np.log(c / u2) + 1.0 - c >= 0)
        th = np.sign(u3[ok] - 0.5) * np.arccos(np.clip(f[ok], -1.0, 1.0))
        take = min(th.size, n - filled)
        out[filled : filled + take] = th[:take]
        filled += take
    return CircularSample(out + mu)


@dataclass(frozen=True)
class DensityValidation:
    """Outcome of the three circular-density checks with their residuals.

    ``periodic_residual`` is the jump across the ``2 pi -> 0`` seam divided by
    the largest jump between neighbouring grid points (0 for flat curves).
    """

    nonnegative: bool
    periodic: bool
    normalized: bool
    min_value: float
    periodic_residual: float
    integral_residual: float

    @property
    def ok(self) -> bool:
        return self.nonnegative and self.periodic and self.normalized


def validate_circular_density(
    f: DensityCurve, tol: float = 1e-8, seam_factor: float = 2.0
) -> DensityValidation:
    v = f.values
    integral_residual = f.integral() - 1.0
    seam = abs(v[0] - v[-1])
    interior = float(np.max(np.abs(np.diff(v)))) if v.size > 1 else 0.0
    floor = 1e-12 * max(1.0, float(np.max(np.abs(v))))
    if interior <= floor:
        ratio = 0.0 if seam <= floor else math.inf
    else:
        ratio = seam / interior
    return DensityValidation(
        nonnegative=bool(np.all(v >= 0)),
        periodic=ratio <= seam_factor,
        normalized=abs(integral_residual) <= tol,
        min_value=float(np.min(v)),
        periodic_residual=float(ratio),
        integral_residual=float(integral_residual),
    )


def stats_report(s: CircularSample) -> dict:
    """JSON-ready summary; undefined direction and infinite SD become ``None``."""
    m = trig_moment(s, 1)
    sd = circular_sd(s)
    return {
        "n": s.n,
        "mean_direction_deg": None if m.direction is None else math.degrees(m.direction),
        "mean_resultant_length": m.length,
        "circ_variance": 1.0 - m.length,
        "circ_sd": None if math.isinf(sd) else sd,
        "mean_angular_deviation": math.sqrt(2.0 * (1.0 - m.length)),
    }
