"""Periodic B-spline bases with a zero-integral coefficient constraint.

A degree-``k`` spline on ``[a, b]`` with inner knots ``lambda_1 < ... <
lambda_g`` is written in the classical B-spline basis ``B_{-k}, ..., B_g``
(``g + k + 1`` functions) over a knot sequence extended periodically by ``k``
knots on each side.  Periodic splines use ``g + 1`` coefficients, mapped to
the full vector by the 0/1 matrix ``K``; periodic splines with zero integral
use ``g`` reduced coefficients, mapped by ``P`` which solves the integral
condition for the last periodic coefficient.  With ``U = K @ P`` every spline
of the constrained space is ``s(x) = C(x) @ U @ b_reduced``.

Index convention: the full coefficient ``b_i`` (``i = -k..g``) lives at array
position ``i + k``; the extended knot ``lambda_i`` (``i = -k..g+k+1``) lives at
position ``i + k`` of :attr:`KnotConfig.extended`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import InputError

__all__ = [
    "KnotConfig",
    "PeriodicSplineZ",
    "extend_knots_periodic",
    "bspline_basis",
    "collocation_matrix",
    "matrix_K",
    "matrix_P",
    "matrix_U",
    "derivative_operator",
    "gram_matrix",
    "difference_matrix",
    "eval_spline",
    "eval_derivative",
    "basis_integrals",
    "spline_integral",
    "schoenberg_whitney",
]

# relative slack for abscissae that overshoot [a, b] by rounding only
_DOMAIN_SLACK = 1e-12


@dataclass(frozen=True)
class KnotConfig:
    """Degree, interval and strictly increasing inner knots of a spline space.

    Parameters
    ----------
    a, b : float
        Interval endpoints, ``a < b``.
    k : int
        Spline degree, ``k >= 1``.
    inner_knots : sequence of float
        ``lambda_1 < ... < lambda_g`` strictly inside ``(a, b)`` with
        ``g >= k + 1``.
    """

    a: float
    b: float
    k: int
    inner_knots: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))
        knots = tuple(float(v) for v in self.inner_knots)
        object.__setattr__(self, "inner_knots", knots)
        if int(self.k) != self.k or self.k < 1:
            raise InputError(f"spline degree must be an integer >= 1, got {self.k!r}")
        object.__setattr__(self, "k", int(self.k))
        if not self.a < self.b:
            raise InputError(f"interval must satisfy a < b, got [{self.a}, {self.b}]")
        if not all(math.isfinite(v) for v in knots):
            raise InputError("inner knots must be finite")
        arr = np.asarray(knots)
        if arr.size and np.any(np.diff(arr) <= 0):
            raise InputError("inner knots must be strictly increasing")
        if arr.size and (arr[0] <= self.a or arr[-1] >= self.b):
            raise InputError("inner knots must lie strictly inside (a, b)")
        if len(knots) < self.k + 1:
            raise InputError(
                f"need g >= k + 1 inner knots for a periodic basis: g={len(knots)}, k={self.k}"
            )

    @classmethod
    def uniform(cls, g: int, k: int = 3, a: float = 0.0, b: float = 2 * math.pi) -> "KnotConfig":
        """Equidistant inner knots ``a + i (b - a) / (g + 1)``, ``i = 1..g``."""
        g = int(g)
        h = (b - a) / (g + 1)
        return cls(a, b, k, tuple(a + i * h for i in range(1, g + 1)))

    @property
    def g(self) -> int:
        return len(self.inner_knots)

    @property
    def width(self) -> float:
        return self.b - self.a

    @property
    def n_full(self) -> int:
        """Dimension of the unconstrained spline space, ``g + k + 1``."""
        return self.g + self.k + 1

    @cached_property
    def extended(self) -> np.ndarray:
        t = extend_knots_periodic(self)
        t.setflags(write=False)
        return t

    def lam(self, i: int) -> float:
        """Extended knot ``lambda_i`` for ``i = -k..g+k+1``."""
        return float(self.extended[i + self.k])

    def to_dict(self) -> dict:
        return {
            "degree": self.k,
            "interval": [self.a, self.b],
            "inner_knots": list(self.inner_knots),
        }


def extend_knots_periodic(cfg: KnotConfig) -> np.ndarray:
    """Full knot sequence ``lambda_{-k}, ..., lambda_{g+k+1}`` with periodic ends.

    ``lambda_{-i} = lambda_{g+1-i} - (b - a)`` and
    ``lambda_{g+1+i} = lambda_i + (b - a)`` for ``i = 1..k``.
    """
    k, g, eta = cfg.k, cfg.g, cfg.b - cfg.a
    core = np.concatenate(([cfg.a], cfg.inner_knots, [cfg.b]))  # lambda_0 .. lambda_{g+1}
    left = core[g + 1 - k : g + 1] - eta  # lambda_{-k} .. lambda_{-1}
    right = core[1 : k + 1] + eta  # lambda_{g+2} .. lambda_{g+k+1}
    return np.concatenate((left, core, right))


def _check_domain(cfg: KnotConfig, xs: np.ndarray) -> np.ndarray:
    if xs.size == 0:
        return xs
    if not np.all(np.isfinite(xs)):
        raise InputError("abscissae must be finite")
    slack = _DOMAIN_SLACK * cfg.width
    lo, hi = xs.min(), xs.max()
    if lo < cfg.a - slack or hi > cfg.b + slack:
        raise InputError(
            f"abscissae must lie in [{cfg.a}, {cfg.b}] (got range [{lo}, {hi}]); "
            "reduce circular arguments modulo the period first"
        )
    return np.clip(xs, cfg.a, cfg.b)


def _basis_matrix(t: np.ndarray, p: int, xs: np.ndarray) -> np.ndarray:
    """All degree-``p`` B-splines over knot vector ``t`` evaluated at ``xs``.

    Vectorized Cox-de Boor triangle on the knot span of each point.  Spans are
    half-open except the last one, which is closed so that the right end of
    the domain ``[t[p], t[-p-1]]`` belongs to it.
    """
    n_basis = len(t) - p - 1
    xs = np.asarray(xs, dtype=float)
    span = np.searchsorted(t, xs, side="right") - 1
    span = np.clip(span, p, n_basis - 1)

    n = xs.size
    vals = np.zeros((n, p + 1))
    vals[:, 0] = 1.0
    left = np.zeros((n, p + 1))
    right = np.zeros((n, p + 1))
    for j in range(1, p + 1):
        left[:, j] = xs - t[span + 1 - j]
        right[:, j] = t[span + j] - xs
        saved = np.zeros(n)
        for r in range(j):
            denom = right[:, r + 1] + left[:, j - r]
            # 0/0 := 0 at coincident knots
            safe = np.where(denom != 0.0, denom, 1.0)
            temp = np.where(denom != 0.0, vals[:, r] / safe, 0.0)
            vals[:, r] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        vals[:, j] = saved

    out = np.zeros((n, n_basis))
    rows = np.arange(n)
    for r in range(p + 1):
        out[rows, span - p + r] = vals[:, r]
    return out


def _knots_for_degree(cfg: KnotConfig, degree: int) -> np.ndarray:
    """Sub-sequence of the extended knots carrying the degree-``degree`` basis
    ``B_i^{degree+1}``, ``i = -degree..g`` (used for derivative splines)."""
    drop = cfg.k - degree
    t = cfg.extended
    return t[drop : len(t) - drop] if drop else t


def bspline_basis(cfg: KnotConfig, x: float) -> np.ndarray:
    """Values ``B_{-k}^{k+1}(x), ..., B_g^{k+1}(x)`` at a single point."""
    return collocation_matrix(cfg, [x])[0]


def collocation_matrix(cfg: KnotConfig, xs: Sequence[float], degree: int | None = None) -> np.ndarray:
    """Collocation matrix ``C`` with ``C[j, i] = B_i(x_j)``.

    ``degree`` defaults to ``cfg.k``; lower degrees ``k - l`` give the basis in
    which ``l``-th derivatives are expressed.
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    if xs.ndim != 1 or xs.size == 0:
        raise InputError("collocation needs a non-empty 1-d sequence of abscissae")
    degree = cfg.k if degree is None else int(degree)
    if not 0 <= degree <= cfg.k:
        raise InputError(f"basis degree must lie in [0, {cfg.k}], got {degree}")
    xs = _check_domain(cfg, xs)
    return _basis_matrix(_knots_for_degree(cfg, degree), degree, xs)


def matrix_K(g: int, k: int) -> np.ndarray:
    """``(g+k+1) x (g+1)`` matrix copying ``b_{-k}..b_{-1}`` into the last ``k`` slots."""
    if k < 1 or g <= k:
        raise InputError(f"matrix K needs g > k >= 1, got g={g}, k={k}")
    K = np.zeros((g + k + 1, g + 1))
    K[: g + 1, :] = np.eye(g + 1)
    K[g + 1 :, :k] = np.eye(k)
    return K


def _periodic_integral_weights(cfg: KnotConfig) -> np.ndarray:
    """``(lambda_{i+k+1} - lambda_i) / (k+1)`` for ``i = -k..g-k``: integrals of the
    periodic basis functions over ``[a, b]``."""
    t, k, g = cfg.extended, cfg.k, cfg.g
    idx = np.arange(g + 1)  # positions of i = -k..g-k
    return (t[idx + k + 1] - t[idx]) / (k + 1)


def matrix_P(cfg: KnotConfig) -> np.ndarray:
    """``(g+1) x g`` matrix ``[I_g; a]`` enforcing a zero integral.

    ``a_i = -(lambda_{i+k+1} - lambda_i) / (lambda_{g+1} - lambda_{g-k})`` for
    ``i = -k..g-k-1``.
    """
    g, k = cfg.g, cfg.k
    denom = cfg.lam(g + 1) - cfg.lam(g - k)
    assert denom > 0, "strictly increasing knots give a positive last support"
    t = cfg.extended
    idx = np.arange(g)
    row = -(t[idx + k + 1] - t[idx]) / denom
    return np.vstack((np.eye(g), row))


def matrix_U(cfg: KnotConfig) -> np.ndarray:
    """``U = K @ P``, mapping reduced coefficients to full B-spline coefficients."""
    return matrix_K(cfg.g, cfg.k) @ matrix_P(cfg)


def derivative_operator(cfg: KnotConfig, l: int) -> np.ndarray:
    """Matrix ``S_l = D_l L_l ... D_1 L_1`` of shape ``(g+k+1-l, g+k+1)``.

    ``S_l @ b`` are the coefficients, in the degree ``k - l`` basis, of the
    ``l``-th derivative of the spline with full coefficients ``b``.
    """
    k, g = cfg.k, cfg.g
    if int(l) != l or not 1 <= l <= k - 1:
        raise InputError(f"derivative order must lie in 1..{k - 1} for degree {k}, got {l}")
    t = cfg.extended
    S = np.eye(g + k + 1)
    for j in range(1, int(l) + 1):
        m = g + k + 1 - j
        L = np.zeros((m, m + 1))
        L[np.arange(m), np.arange(m)] = -1.0
        L[np.arange(m), np.arange(1, m + 1)] = 1.0
        # d_i = 1 / (lambda_{i+k+1-j} - lambda_i), i = -k+j..g
        pos = np.arange(j, g + k + 1)
        d = (k + 1 - j) / (t[pos + k + 1 - j] - t[pos])
        S = (d[:, None] * L) @ S
    return S


def gram_matrix(cfg: KnotConfig, l: int) -> np.ndarray:
    """Gram matrix ``M_kl`` of the degree ``k - l`` B-splines over ``[a, b]``.

    Integrated exactly by ``k - l + 1``-point Gauss-Legendre on every knot
    interval.  ``l = k`` (piecewise constants) is accepted as well.
    """
    k = cfg.k
    if int(l) != l or not 0 <= l <= k:
        raise InputError(f"Gram order l must lie in 0..{k}, got {l}")
    q = k - int(l)
    nodes, weights = leggauss(q + 1)
    core = cfg.extended[k : k + cfg.g + 2]
    lo, hi = core[:-1], core[1:]
    half = 0.5 * (hi - lo)
    xs = (0.5 * (hi + lo))[:, None] + half[:, None] * nodes[None, :]
    ws = half[:, None] * weights[None, :]
    # Gauss nodes are interior, so each lands in its own knot interval
    B = _basis_matrix(_knots_for_degree(cfg, q), q, xs.ravel())
    M = B.T @ (ws.ravel()[:, None] * B)
    return 0.5 * (M + M.T)


def difference_matrix(g: int, d: int, cyclic: bool = False) -> np.ndarray:
    """Order-``d`` difference matrix acting on ``g`` reduced coefficients.

    Ordinary forward differences give a ``(g-d) x g`` matrix.  With
    ``cyclic=True`` the first-order operator wraps around (``g x g``
    circulant) and ``D_d`` is its ``d``-th power.
    """
    if int(d) != d or d < 1 or d >= g:
        raise InputError(f"difference order must satisfy 1 <= d < g, got d={d}, g={g}")
    if cyclic:
        D1 = np.roll(np.eye(g), 1, axis=1) - np.eye(g)
        return np.linalg.matrix_power(D1, int(d))
    return np.diff(np.eye(g), n=int(d), axis=0)


def basis_integrals(cfg: KnotConfig) -> np.ndarray:
    """``int_a^b B_i(x) dx`` for the full degree-``k`` basis, in closed form.

    Interior B-splines integrate to ``(lambda_{i+k+1} - lambda_i)/(k+1)``.  A
    left boundary B-spline ``B_i`` (``i < 0``) loses the mass below ``a``,
    which equals ``sum_{j=i}^{-1} N_j(a)`` times its total integral, ``N_j``
    being the degree ``k+1`` B-splines on the same knots.  By periodicity of
    the extended knots the right boundary B-spline ``B_{g+1+i}`` keeps exactly
    that lost fraction.
    """
    k, g, t = cfg.k, cfg.g, cfg.extended
    pos = np.arange(g + k + 1)
    total = (t[pos + k + 1] - t[pos]) / (k + 1)
    frac = np.ones(g + k + 1)
    below = np.zeros(k)
    for i in range(-k, 0):
        below[i + k] = sum(_single_bspline(t[j + k : j + 2 * k + 3], cfg.a) for j in range(i, 0))
    frac[:k] = 1.0 - below
    frac[g + 1 :] = below
    return total * frac


def _single_bspline(tl: np.ndarray, x: float) -> float:
    """One B-spline of degree ``len(tl) - 2`` over local knots ``tl`` at ``x``."""
    p = len(tl) - 2
    vals = [1.0 if tl[i] <= x < tl[i + 1] else 0.0 for i in range(p + 1)]
    for q in range(1, p + 1):
        nxt = []
        for i in range(p + 1 - q):
            v = 0.0
            den = tl[i + q] - tl[i]
            if den > 0:
                v += (x - tl[i]) / den * vals[i]
            den = tl[i + q + 1] - tl[i + 1]
            if den > 0:
                v += (tl[i + q + 1] - x) / den * vals[i + 1]
            nxt.append(v)
        vals = nxt
    return vals[0]


def spline_integral(coeffs_full: Sequence[float], cfg: KnotConfig) -> float:
    """Exact ``int_a^b s(x) dx`` for the spline with full coefficients.

    For periodic coefficient vectors this reduces to
    ``sum_{i=-k}^{g-k} b_i (lambda_{i+k+1} - lambda_i) / (k+1)``.
    """
    b = np.asarray(coeffs_full, dtype=float)
    if b.shape != (cfg.n_full,):
        raise InputError(f"expected {cfg.n_full} full coefficients, got shape {b.shape}")
    return float(basis_integrals(cfg) @ b)


def schoenberg_whitney(cfg: KnotConfig, xs: Sequence[float]) -> bool:
    """True when some increasing ``u_{-k} < ... < u_g`` drawn from ``xs`` satisfies
    ``lambda_i < u_i < lambda_{i+k+1}``, i.e. the full collocation matrix has
    full column rank."""
    t, k = cfg.extended, cfg.k
    pts = np.unique(np.asarray(xs, dtype=float))
    j = 0
    last = -np.inf
    for pos in range(cfg.n_full):
        lo, hi = t[pos], t[pos + k + 1]
        # greedy: smallest admissible point after the previous pick
        while j < pts.size and (pts[j] <= lo or pts[j] <= last):
            j += 1
        if j == pts.size or pts[j] >= hi:
            return False
        last = pts[j]
        j += 1
    return True


@dataclass(frozen=True, eq=False)
class PeriodicSplineZ:
    """Periodic spline with zero integral, stored by its ``g`` reduced coefficients."""

    knots: KnotConfig
    coeffs_reduced: np.ndarray

    def __post_init__(self):
        b = np.array(self.coeffs_reduced, dtype=float)
        if b.shape != (self.knots.g,):
            raise InputError(f"expected {self.knots.g} reduced coefficients, got shape {b.shape}")
        b.setflags(write=False)
        object.__setattr__(self, "coeffs_reduced", b)

    @cached_property
    def coeffs_full(self) -> np.ndarray:
        b = matrix_U(self.knots) @ self.coeffs_reduced
        b.setflags(write=False)
        return b

    def __call__(self, x):
        return eval_spline(self, x)

    def derivative(self, x, l: int):
        return eval_derivative(self, x, l)

    def integral(self) -> float:
        return spline_integral(self.coeffs_full, self.knots)

    def to_dict(self) -> dict:
        out = self.knots.to_dict()
        out["coeffs_reduced"] = self.coeffs_reduced.tolist()
        out["coeffs_full"] = self.coeffs_full.tolist()
        return out

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: dict) -> "PeriodicSplineZ":
        try:
            a, b = data["interval"]
            knots = KnotConfig(a, b, data["degree"], tuple(data["inner_knots"]))
            spline = cls(knots, np.asarray(data["coeffs_reduced"], dtype=float))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed spline document: {exc}") from exc
        if "coeffs_full" in data:
            stored = np.asarray(data["coeffs_full"], dtype=float)
            if stored.shape != spline.coeffs_full.shape or np.max(
                np.abs(stored - spline.coeffs_full)
            ) > 1e-10:
                raise InputError("stored full coefficients disagree with K P b_reduced")
        return spline

    @classmethod
    def from_json(cls, text: str) -> "PeriodicSplineZ":
        return cls.from_dict(json.loads(text))


def eval_spline(s: PeriodicSplineZ, x):
    """Evaluate ``s(x) = C(x) K P b_reduced``; scalar in, scalar out."""
    xs = np.asarray(x, dtype=float)
    vals = collocation_matrix(s.knots, xs.ravel()) @ s.coeffs_full
    return float(vals[0]) if xs.ndim == 0 else vals.reshape(xs.shape)


def eval_derivative(s: PeriodicSplineZ, x, l: int):
    """``l``-th derivative through ``S_l`` and the degree ``k - l`` basis."""
    if l == 0:
        return eval_spline(s, x)
    xs = np.asarray(x, dtype=float)
    coeffs = derivative_operator(s.knots, l) @ s.coeffs_full
    vals = collocation_matrix(s.knots, xs.ravel(), degree=s.knots.k - l) @ coeffs
    return float(vals[0]) if xs.ndim == 0 else vals.reshape(xs.shape)
