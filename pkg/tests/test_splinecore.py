"""Periodic B-spline basis, constraint matrices and the zero-integral spline space."""

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from circbayes.errors import InputError
from circbayes.splinecore import (
    KnotConfig,
    PeriodicSplineZ,
    basis_integrals,
    bspline_basis,
    collocation_matrix,
    derivative_operator,
    difference_matrix,
    eval_derivative,
    extend_knots_periodic,
    gram_matrix,
    matrix_K,
    matrix_P,
    matrix_U,
    schoenberg_whitney,
    spline_integral,
)

import oracles

TWO_PI = 2 * math.pi


def _random_cfg(rng, g, k, a=0.0, b=TWO_PI):
    return KnotConfig(a, b, k, oracles.random_knots(rng, g, k, a, b))


class TestKnots:
    def test_uniform_knots_are_pi_over_five(self):
        cfg = KnotConfig.uniform(9, 3)
        np.testing.assert_allclose(cfg.inner_knots, [math.pi * i / 5 for i in range(1, 10)], rtol=1e-15)

    def test_extension_formula(self):
        cfg = KnotConfig(0.0, 1.0, 2, (0.1, 0.3, 0.6, 0.8))
        t = extend_knots_periodic(cfg)
        # lambda_{-2..7}
        expected = [0.6 - 1, 0.8 - 1, 0, 0.1, 0.3, 0.6, 0.8, 1, 1.1, 1.3]
        np.testing.assert_allclose(t, expected, atol=1e-15)
        assert cfg.lam(-2) == pytest.approx(-0.4)
        assert cfg.lam(7) == pytest.approx(1.3)

    def test_extension_matches_oracle(self):
        rng = np.random.default_rng(3)
        cfg = _random_cfg(rng, 7, 3)
        lam = oracles.periodic_knots(cfg.inner_knots, 3)
        np.testing.assert_array_equal(cfg.extended, [lam[i] for i in range(-3, 7 + 3 + 2)])

    @pytest.mark.parametrize(
        "kwargs, match",
        [
            (dict(a=0, b=1, k=3, inner_knots=(0.2, 0.4, 0.6)), "g >= k \\+ 1"),
            (dict(a=0, b=1, k=1, inner_knots=(0.5, 0.2)), "strictly increasing"),
            (dict(a=0, b=1, k=1, inner_knots=(0.0, 0.5)), "strictly inside"),
            (dict(a=1, b=1, k=1, inner_knots=(0.2, 0.5)), "a < b"),
            (dict(a=0, b=1, k=0, inner_knots=(0.2, 0.5)), "degree"),
        ],
    )
    def test_invalid_configs(self, kwargs, match):
        with pytest.raises(InputError, match=match):
            KnotConfig(**kwargs)


class TestBasis:
    def test_against_textbook_recursion(self):
        rng = np.random.default_rng(11)
        for k in (1, 2, 3, 4):
            cfg = _random_cfg(rng, 8, k)
            xs = np.concatenate(([0.0, TWO_PI], rng.uniform(0, TWO_PI, 40), cfg.inner_knots))
            np.testing.assert_allclose(
                collocation_matrix(cfg, xs), oracles.full_basis(cfg.inner_knots, k, xs), atol=1e-13
            )

    @settings(max_examples=60, deadline=None)
    @given(
        k=st.integers(1, 5),
        extra=st.integers(0, 6),
        seed=st.integers(0, 2**32 - 1),
        x=st.floats(0.0, TWO_PI),
    )
    def test_partition_of_unity(self, k, extra, seed, x):
        cfg = _random_cfg(np.random.default_rng(seed), k + 1 + extra, k)
        vals = bspline_basis(cfg, x)
        assert abs(vals.sum() - 1.0) <= 1e-12
        assert vals.min() >= 0.0
        assert np.count_nonzero(vals) <= k + 1

    def test_domain_violation(self):
        cfg = KnotConfig.uniform(5, 2)
        with pytest.raises(InputError, match="modulo"):
            collocation_matrix(cfg, [TWO_PI + 0.01])
        # rounding-level overshoot is clipped
        np.testing.assert_allclose(collocation_matrix(cfg, [TWO_PI * (1 + 1e-15)]).sum(), 1.0)


class TestConstraintMatrices:
    @pytest.mark.parametrize("g,k", [(4, 1), (4, 3), (9, 3), (12, 4)])
    def test_dimensions_and_ranks(self, g, k):
        cfg = KnotConfig.uniform(g, k)
        K, P, U = matrix_K(g, k), matrix_P(cfg), matrix_U(cfg)
        assert K.shape == (g + k + 1, g + 1)
        assert P.shape == (g + 1, g)
        assert U.shape == (g + k + 1, g)
        assert np.linalg.matrix_rank(U) == g
        assert np.linalg.matrix_rank(K) == g + 1

    def test_K_duplicates_leading_coefficients(self):
        K = matrix_K(5, 2)
        b = np.arange(6.0)
        np.testing.assert_array_equal(K @ b, [0, 1, 2, 3, 4, 5, 0, 1])

    def test_U_matches_elimination_oracle(self):
        rng = np.random.default_rng(5)
        for k in (1, 2, 3):
            cfg = _random_cfg(rng, 7, k)
            np.testing.assert_allclose(matrix_U(cfg), oracles.reduced_map(cfg.inner_knots, k), atol=1e-10)

    def test_columns_of_U_span_zero_integral_periodic_splines(self):
        cfg = KnotConfig.uniform(9, 3)
        U = matrix_U(cfg)
        ints = oracles.basis_integrals(cfg.inner_knots, 3)
        np.testing.assert_allclose(ints @ U, 0.0, atol=1e-12)


class TestIntegrals:
    def test_basis_integrals_against_quadrature(self):
        rng = np.random.default_rng(8)
        for k in (1, 2, 3, 4):
            cfg = _random_cfg(rng, 9, k)
            np.testing.assert_allclose(basis_integrals(cfg), oracles.basis_integrals(cfg.inner_knots, k), atol=1e-12)

    def test_periodic_vector_reduces_to_interior_formula(self):
        cfg = KnotConfig.uniform(9, 3)
        rng = np.random.default_rng(1)
        b = matrix_K(9, 3) @ rng.normal(size=10)
        t = cfg.extended
        closed = sum(b[p] * (t[p + 4] - t[p]) / 4 for p in range(10))
        assert spline_integral(b, cfg) == pytest.approx(closed, rel=1e-13)

    def test_non_periodic_vector(self):
        cfg = KnotConfig(0.0, 1.0, 2, (0.2, 0.45, 0.7))
        b = np.array([1.0, -2.0, 0.5, 3.0, 1.0, 4.0])
        f = lambda x: collocation_matrix(cfg, [x])[0] @ b  # noqa: E731
        ref = integrate.quad(f, 0, 1, points=cfg.inner_knots)[0]
        assert spline_integral(b, cfg) == pytest.approx(ref, abs=1e-12)

    def test_shape_error(self):
        with pytest.raises(InputError):
            spline_integral(np.ones(3), KnotConfig.uniform(4, 1))


class TestDerivatives:
    def test_derivative_operator_against_recursion(self):
        rng = np.random.default_rng(21)
        cfg = _random_cfg(rng, 8, 4)
        b = rng.normal(size=cfg.n_full)
        xs = rng.uniform(0, TWO_PI, 25)
        for l in (1, 2, 3):
            S = derivative_operator(cfg, l)
            assert S.shape == (cfg.n_full - l, cfg.n_full)
            got = collocation_matrix(cfg, xs, degree=4 - l) @ (S @ b)
            ref = oracles.full_basis(cfg.inner_knots, 4, xs, l=l) @ b
            np.testing.assert_allclose(got, ref, atol=1e-9 * max(1, np.abs(ref).max()))

    def test_spline_derivative_against_finite_differences(self):
        cfg = KnotConfig.uniform(9, 3)
        s = PeriodicSplineZ(cfg, np.random.default_rng(2).normal(size=9))
        for x in (0.3, 1.9, 4.4):
            for l in (1, 2):
                assert eval_derivative(s, x, l) == pytest.approx(oracles.derivative_fd(s, x, l, 1e-4), rel=1e-4, abs=1e-5)

    def test_invalid_order(self):
        with pytest.raises(InputError):
            derivative_operator(KnotConfig.uniform(5, 3), 3)


class TestGram:
    @pytest.mark.parametrize("k,l", [(3, 1), (3, 2), (2, 1), (4, 2), (3, 0)])
    def test_against_quadrature(self, k, l):
        cfg = _random_cfg(np.random.default_rng(k * 10 + l), 7, k)
        lam = oracles.periodic_knots(cfg.inner_knots, k)
        q = k - l
        n = cfg.n_full - l
        # degree q basis is B_{-q}..B_g of order q+1 on the same knot labels
        idx = list(range(-q, cfg.g + 1))
        assert len(idx) == n
        ref = np.zeros((n, n))
        for r, i in enumerate(idx):
            for c, j in enumerate(idx):
                if abs(i - j) > q:
                    continue
                f = lambda x: oracles.bspline(lam, i, q + 1, x, TWO_PI) * oracles.bspline(lam, j, q + 1, x, TWO_PI)  # noqa: E731
                ref[r, c] = integrate.quad(f, 0, TWO_PI, points=cfg.inner_knots, limit=200)[0]
        M = gram_matrix(cfg, l)
        np.testing.assert_allclose(M, ref, atol=1e-10)
        np.testing.assert_array_equal(M, M.T)
        assert np.linalg.eigvalsh(M).min() > 0

    def test_interior_row_sums_equal_basis_integrals(self):
        cfg = KnotConfig.uniform(9, 3)
        M = gram_matrix(cfg, 1)  # degree 2 basis B_{-2}..B_9
        t = cfg.extended[1:-1]
        interior = range(2, 10)  # i = 0..7 have full support in [a, b]
        for r in interior:
            assert M[r].sum() == pytest.approx((t[r + 3] - t[r]) / 3, rel=1e-12)

    def test_piecewise_constant_case_is_diagonal(self):
        cfg = KnotConfig.uniform(5, 2)
        M = gram_matrix(cfg, 2)
        np.testing.assert_allclose(M, np.diag(np.diag(M)), atol=1e-15)


class TestDifferenceMatrix:
    def test_acyclic_annihilates_polynomials(self):
        D = difference_matrix(8, 2)
        assert D.shape == (6, 8)
        np.testing.assert_allclose(D @ np.arange(8.0), 0.0)
        np.testing.assert_array_equal(D, oracles.difference_matrix(8, 2))

    def test_cyclic_is_circulant(self):
        D = difference_matrix(6, 2, cyclic=True)
        assert D.shape == (6, 6)
        np.testing.assert_allclose(D @ np.ones(6), 0.0)
        assert np.linalg.matrix_rank(D) == 5
        np.testing.assert_array_equal(D[1], np.roll(D[0], 1))

    def test_order_out_of_range(self):
        with pytest.raises(InputError):
            difference_matrix(4, 4)


class TestSchoenbergWhitney:
    def test_bin_midpoints_interleave(self):
        cfg = KnotConfig.uniform(9, 3)
        xs = (np.arange(36) + 0.5) * TWO_PI / 36
        assert schoenberg_whitney(cfg, xs)

    def test_clustered_points_do_not(self):
        cfg = KnotConfig.uniform(9, 3)
        assert not schoenberg_whitney(cfg, np.linspace(0.1, 0.5, 40))


class TestPeriodicSplineZ:
    @settings(max_examples=40, deadline=None)
    @given(k=st.integers(1, 4), extra=st.integers(0, 6), seed=st.integers(0, 2**32 - 1))
    def test_constraints_hold(self, k, extra, seed):
        rng = np.random.default_rng(seed)
        cfg = _random_cfg(rng, k + 1 + extra, k)
        s = PeriodicSplineZ(cfg, rng.normal(size=cfg.g))
        assert abs(s.integral()) <= 1e-10
        for l in range(k):
            assert abs(eval_derivative(s, 0.0, l) - eval_derivative(s, TWO_PI, l)) <= 1e-9

    def test_json_roundtrip(self):
        cfg = KnotConfig(0.0, TWO_PI, 3, tuple(np.linspace(0.5, 5.5, 9)))
        s = PeriodicSplineZ(cfg, np.linspace(-1, 1, 9))
        t = PeriodicSplineZ.from_json(s.to_json())
        np.testing.assert_array_equal(t.coeffs_reduced, s.coeffs_reduced)
        assert t.knots == s.knots

    def test_tampered_full_coefficients_rejected(self):
        s = PeriodicSplineZ(KnotConfig.uniform(5, 2), np.ones(5))
        doc = json.loads(s.to_json())
        doc["coeffs_full"][-1] += 1e-6
        with pytest.raises(InputError, match="disagree"):
            PeriodicSplineZ.from_dict(doc)

    def test_scalar_in_scalar_out(self):
        s = PeriodicSplineZ(KnotConfig.uniform(5, 2), np.arange(5.0))
        assert isinstance(s(1.0), float)
        assert s(np.array([1.0, 2.0])).shape == (2,)

    def test_wrong_length(self):
        with pytest.raises(InputError):
            PeriodicSplineZ(KnotConfig.uniform(5, 2), np.ones(4))
