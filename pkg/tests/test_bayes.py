"""Bayes-space operations on gridded densities."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from circbayes.bayes import (
    ClrCurve,
    DensityCurve,
    Grid,
    bayes_dist,
    bayes_inner,
    bayes_norm,
    clr_inverse,
    clr_transform,
    curve_to_csv,
    functional_sd,
    mean_density,
    perturb,
    power,
    sample_mean_clr,
)
from circbayes.errors import InputError, NumericalError

import oracles

TWO_PI = 2 * math.pi


def vm(theta, mu, kappa):
    return np.exp(kappa * np.cos(theta - mu))


@pytest.fixture
def grid():
    return Grid.uniform(360)


def _density(grid, mu=1.0, kappa=2.0):
    return DensityCurve(grid, vm(grid.points, mu, kappa)).normalize()


class TestGrid:
    def test_uniform_weights(self, grid):
        np.testing.assert_allclose(grid.weights, TWO_PI / 360, rtol=1e-13)
        assert grid.weights.sum() == pytest.approx(TWO_PI, rel=1e-14)

    def test_nonuniform_weights_wrap(self):
        g = Grid(0.0, 1.0, [0.1, 0.2, 0.6])
        np.testing.assert_allclose(g.weights, [0.3, 0.25, 0.45])

    def test_trig_polynomials_integrate_exactly(self, grid):
        assert grid.integrate(np.cos(3 * grid.points)) == pytest.approx(0.0, abs=1e-13)

    def test_invalid(self):
        with pytest.raises(InputError):
            Grid(0.0, 1.0, [0.5, 0.2])
        with pytest.raises(InputError):
            Grid(0.0, 1.0, [0.5, 1.0])


class TestDensityCurve:
    def test_offending_index_reported(self, grid):
        v = np.ones(360)
        v[17] = 0.0
        with pytest.raises(InputError, match="index 17"):
            DensityCurve(grid, v)

    def test_uniform(self, grid):
        assert DensityCurve.uniform(grid).integral() == pytest.approx(1.0, rel=1e-14)


class TestClr:
    def test_uniform_maps_to_zero(self, grid):
        np.testing.assert_allclose(clr_transform(DensityCurve.uniform(grid)).values, 0.0, atol=1e-15)

    def test_scale_invariance(self, grid):
        f = _density(grid)
        g = DensityCurve(grid, 37.5 * f.values)
        np.testing.assert_allclose(clr_transform(f).values, clr_transform(g).values, atol=1e-13)

    def test_von_mises_clr_is_centred_cosine(self, grid):
        # ln f = kappa cos(theta - mu) + const, and the cosine already integrates to 0
        f = _density(grid, 0.4, 3.0)
        np.testing.assert_allclose(clr_transform(f).values, 3.0 * np.cos(grid.points - 0.4), atol=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), scale=st.floats(0.1, 30.0))
    def test_roundtrip(self, seed, scale):
        grid = Grid.uniform(90)
        rng = np.random.default_rng(seed)
        z = ClrCurve.project(grid, scale * rng.normal(size=90))
        np.testing.assert_allclose(clr_transform(clr_inverse(z)).values, z.values, atol=1e-8)
        f = DensityCurve(grid, rng.uniform(0.01, 5, 90)).normalize()
        np.testing.assert_allclose(clr_inverse(clr_transform(f)).values, f.values, rtol=1e-8)

    def test_inverse_handles_large_values(self, grid):
        z = ClrCurve.project(grid, 300 * np.cos(grid.points))
        f = clr_inverse(z)
        assert np.all(np.isfinite(f.values))
        assert f.integral() == pytest.approx(1.0, rel=1e-12)

    def test_inverse_underflow_is_reported(self, grid):
        with pytest.raises(NumericalError, match="span"):
            clr_inverse(ClrCurve.project(grid, 800 * np.cos(grid.points)))

    def test_nonzero_integral_rejected(self, grid):
        with pytest.raises(InputError, match="project"):
            ClrCurve(grid, np.ones(360))


class TestVectorSpace:
    def test_perturb_is_clr_addition(self, grid):
        f, g = _density(grid, 1.0, 2.0), _density(grid, 4.0, 0.5)
        np.testing.assert_allclose(
            clr_transform(perturb(f, g)).values, clr_transform(f).values + clr_transform(g).values, atol=1e-12
        )

    def test_power_is_clr_scaling(self, grid):
        f = _density(grid)
        np.testing.assert_allclose(clr_transform(power(-2.5, f)).values, -2.5 * clr_transform(f).values, atol=1e-12)

    def test_uniform_is_neutral(self, grid):
        f = _density(grid)
        np.testing.assert_allclose(perturb(f, DensityCurve.uniform(grid)).values, f.values, rtol=1e-12)

    def test_different_grids(self, grid):
        with pytest.raises(InputError, match="different grids"):
            perturb(_density(grid), _density(Grid.uniform(36)))

    def test_distance(self, grid):
        f, g = _density(grid, 1.0, 2.0), _density(grid, 1.0, 1.0)
        # clr f - clr g = cos(theta - 1), whose squared integral is pi
        assert bayes_dist(f, g) == pytest.approx(math.sqrt(math.pi), rel=1e-12)
        assert bayes_norm(f) == pytest.approx(2 * math.sqrt(math.pi), rel=1e-12)


class TestInnerProduct:
    def test_equals_discrete_double_sum(self, grid):
        rng = np.random.default_rng(4)
        f = DensityCurve(grid, rng.uniform(0.1, 3, 360))
        g = DensityCurve(grid, rng.uniform(0.1, 3, 360))
        ref = oracles.brute_bayes_inner(f.values, g.values, grid.weights)
        assert abs(bayes_inner(f, g) - ref) <= 1e-10 * max(1, abs(ref))

    def test_equals_continuous_double_integral(self, grid):
        lf = lambda x: 2.0 * math.cos(x - 1.0) + 0.5 * math.sin(2 * x)  # noqa: E731
        lg = lambda x: math.cos(x - 2.0) - 0.3 * math.cos(3 * x)  # noqa: E731
        val, _ = integrate.dblquad(
            lambda y, x: (lf(x) - lf(y)) * (lg(x) - lg(y)), 0, TWO_PI, 0, TWO_PI, epsabs=1e-11, epsrel=1e-11
        )
        ref = val / (2 * TWO_PI)
        f = DensityCurve(grid, np.exp([lf(x) for x in grid.points]))
        g = DensityCurve(grid, np.exp([lg(x) for x in grid.points]))
        assert abs(bayes_inner(f, g) - ref) <= 1e-6


class TestSampleStatistics:
    def test_single_curve_has_zero_sd(self, grid):
        z = clr_transform(_density(grid))
        np.testing.assert_array_equal(functional_sd([z]), 0.0)

    def test_mirrored_pair_has_zero_mean(self, grid):
        z = clr_transform(_density(grid))
        w = ClrCurve(grid, -z.values)
        np.testing.assert_allclose(sample_mean_clr([z, w]).values, 0.0, atol=1e-15)

    def test_mean_density_is_normalized_geometric_mean(self, grid):
        f, g = _density(grid, 1.0, 2.0), _density(grid, 3.0, 1.0)
        m = mean_density([f, g])
        ref = np.sqrt(f.values * g.values)
        np.testing.assert_allclose(m.values, ref / grid.integrate(ref), rtol=1e-12)

    def test_empty_sample(self):
        with pytest.raises(InputError):
            sample_mean_clr([])


def test_curve_csv():
    g = Grid.uniform(4)
    text = curve_to_csv(g, [1.0, 2.0, 3.0, 4.0])
    assert text.splitlines()[0] == "x,value"
    assert text.count("\n") == 5
    assert "\r" not in text
