import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import j0 as scipy_j0

from glauber_p.numerics import (
    Grid1D,
    bessel_j0,
    integrate_1d,
    integrate_2d,
    rng_stream,
    simpson_weights,
)

# 30-digit power series summed and root-polished with mpmath
J0_AT_1 = 0.765197686557966551449717526103
J0_FIRST_ZERO = 2.40482555769577276862163187933


class TestGrid:
    def test_points_and_stop(self):
        g = Grid1D(0.0, 0.5, 5)
        np.testing.assert_allclose(g.points, [0, 0.5, 1, 1.5, 2])
        assert g.stop == 2.0

    @pytest.mark.parametrize("kw", [dict(step=0.0, count=5), dict(step=-1.0, count=5), dict(step=0.1, count=1)])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            Grid1D(0.0, **kw)

    def test_from_range_hits_endpoint(self):
        g = Grid1D.from_range(0.0, 2.8, 0.01)
        assert g.count == 281
        assert g.stop == pytest.approx(2.8, abs=1e-15)

    def test_index_of_snaps_and_rejects(self):
        g = Grid1D(0.0, 0.01, 401)
        assert g.index_of(2.8) == 280
        assert g.index_of(1.9) == 190
        with pytest.raises(ValueError):
            g.index_of(4.5)


class TestBesselJ0:
    def test_origin(self):
        assert bessel_j0(0.0) == 1.0

    def test_against_series_oracle(self):
        assert bessel_j0(1.0) == pytest.approx(J0_AT_1, abs=1e-14)
        assert abs(bessel_j0(J0_FIRST_ZERO)) < 1e-10

    def test_matches_scipy_to_1e10(self):
        x = np.linspace(-50, 50, 100_001)
        assert np.max(np.abs(bessel_j0(x) - scipy_j0(x))) < 1e-10

    def test_branch_switch_is_continuous(self):
        x = np.linspace(11.9, 12.1, 2001)
        assert np.max(np.abs(bessel_j0(x) - scipy_j0(x))) < 1e-10

    @pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
    def test_non_finite(self, bad):
        with pytest.raises(ValueError):
            bessel_j0(bad)

    @given(st.floats(-200, 200, allow_nan=False))
    def test_bounded_and_even(self, x):
        assert abs(bessel_j0(x)) <= 1.0
        assert bessel_j0(-x) == bessel_j0(x)


class TestIntegrate1D:
    def test_linear_exact(self):
        assert integrate_1d(lambda x: x, Grid1D.from_range(0, 1, 0.01)) == pytest.approx(0.5, abs=1e-12)

    def test_gaussian_moment(self):
        g = Grid1D.from_range(0, 6, 0.01)
        exact = (1 - math.exp(-36)) / 2
        assert integrate_1d(lambda x: x * np.exp(-(x**2)), g) == pytest.approx(exact, abs=1e-8)

    def test_zero(self):
        assert integrate_1d(lambda x: 0 * x, Grid1D(0, 0.1, 11)) == 0.0

    def test_cubic_exact_under_simpson(self):
        g = Grid1D(0.0, 0.25, 9)
        assert integrate_1d(lambda x: x**3 - x, g) == pytest.approx(2**4 / 4 - 2, abs=1e-13)

    def test_odd_panel_fallback(self):
        g = Grid1D.from_range(0, 1, 0.001)
        g_odd = Grid1D(0.0, g.step, g.count - 1)
        val = integrate_1d(np.exp, g_odd)
        assert val == pytest.approx(math.exp(g_odd.stop) - 1, abs=1e-8)

    def test_weights_sum_to_length(self):
        for count in (2, 3, 4, 10, 11):
            g = Grid1D(0.0, 0.3, count)
            assert simpson_weights(g).sum() == pytest.approx(g.stop - g.start)

    def test_accepts_sample_array(self):
        g = Grid1D.from_range(0, 1, 0.1)
        assert integrate_1d(g.points**2, g) == pytest.approx(1 / 3, abs=1e-14)

    def test_non_finite_integrand(self):
        with pytest.raises(ValueError):
            integrate_1d(lambda x: np.full_like(x, np.nan), Grid1D(0.0, 0.1, 5))

    @settings(max_examples=30)
    @given(st.floats(-5, 5), st.floats(-5, 5))
    def test_linear_in_f(self, a, c):
        g = Grid1D.from_range(0, 2, 0.01)
        f, h = np.sin, np.exp
        lhs = integrate_1d(lambda x: a * f(x) + c * h(x), g)
        rhs = a * integrate_1d(f, g) + c * integrate_1d(h, g)
        assert lhs == pytest.approx(rhs, abs=1e-11)

    def test_additive_over_adjacent_intervals(self):
        left, right = Grid1D(0.0, 0.01, 101), Grid1D(1.0, 0.01, 101)
        whole = Grid1D(0.0, 0.01, 201)
        f = lambda x: np.cos(3 * x) * np.exp(-x)  # noqa: E731
        assert integrate_1d(f, left) + integrate_1d(f, right) == pytest.approx(
            integrate_1d(f, whole), abs=1e-13
        )


class TestIntegrate2D:
    def test_unit_square(self):
        g = Grid1D.from_range(0, 1, 0.05)
        assert integrate_2d(lambda x, y: np.ones_like(x), g, g) == pytest.approx(1.0, abs=1e-12)

    def test_separable(self):
        g = Grid1D.from_range(0, 1, 0.05)
        assert integrate_2d(lambda x, y: x * y, g, g) == pytest.approx(0.25, abs=1e-12)

    def test_matches_nested_1d(self):
        g = Grid1D.from_range(0, 1, 0.005)
        inner = [integrate_1d(lambda y: np.exp(x * y), g) for x in g.points]
        nested = integrate_1d(np.array(inner), g)
        assert integrate_2d(lambda x, y: np.exp(x * y), g, g) == pytest.approx(nested, abs=1e-10)

    def test_symmetric_integrand(self):
        g = Grid1D.from_range(0, 2, 0.02)
        f = lambda x, y: np.cos(x - y) * np.exp(-x * y)  # noqa: E731
        arr = f(*np.meshgrid(g.points, g.points, indexing="ij"))
        assert integrate_2d(arr, g, g) == pytest.approx(integrate_2d(arr.T, g, g), abs=1e-14)

    def test_invalid_grid(self):
        with pytest.raises(TypeError):
            integrate_2d(lambda x, y: x, (0, 1), Grid1D(0, 0.1, 3))


class TestRng:
    def test_same_seed_replays(self):
        a, b = rng_stream(7), rng_stream(7)
        np.testing.assert_array_equal(a.normal(500), b.normal(500))
        np.testing.assert_array_equal(a.uniform(500), b.uniform(500))

    def test_seed_sensitivity(self):
        assert not np.array_equal(rng_stream(1).normal(1000), rng_stream(2).normal(1000))

    def test_normal_moments(self):
        n = 1_000_000
        z = rng_stream(123).normal(n)
        assert abs(z.mean()) < 4 / math.sqrt(n)
        assert 0.992 <= z.var() <= 1.008

    def test_uniform_range(self):
        u = rng_stream(3).uniform(10_000)
        assert u.min() >= 0 and u.max() < 1

    def test_spawned_streams_differ_and_replay(self):
        s = rng_stream(9)
        assert not np.array_equal(s.spawn(0).normal(100), s.spawn(1).normal(100))
        np.testing.assert_array_equal(rng_stream(9).spawn(3).normal(100), s.spawn(3).normal(100))

    @pytest.mark.parametrize("seed", [-1, 2**64])
    def test_seed_range(self, seed):
        with pytest.raises(ValueError):
            rng_stream(seed)

    def test_full_64bit_seed(self):
        rng_stream(2**64 - 1).normal(3)
