import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from wstats import (
    DensityError,
    LocationScaleModel,
    QuantileError,
    UnknownFamilyError,
    load_tabulated,
    make_custom,
    make_standard,
    quantile_numeric,
)
from wstats.densities import SQRT3

from .conftest import FAMILIES, mp_integral


def _quad(fn, a, b):
    return integrate.quad(fn, a, b, epsabs=1e-14, epsrel=1e-13, limit=400)[0]


class TestBuiltins:
    def test_unknown_family(self):
        with pytest.raises(UnknownFamilyError):
            make_standard("cauchy")

    @pytest.mark.parametrize("name,m4", [("gaussian", 3.0), ("uniform", 9 / 5), ("laplace", 6.0)])
    def test_fourth_moment(self, name, m4):
        d = make_standard(name)
        assert d.fourth_moment == pytest.approx(m4, abs=1e-14)
        # independent oracle: arbitrary-precision quadrature
        lo, hi = (-math.inf, math.inf) if not d.bounded else d.support
        assert mp_integral(name, lambda z: z**4, lo, hi) == pytest.approx(m4, abs=1e-12)

    def test_uniform_shape(self):
        d = make_standard("uniform")
        assert d.support == pytest.approx((-SQRT3, SQRT3))
        assert float(d.pdf(0.0)) == pytest.approx(1 / (2 * SQRT3))
        assert float(d.pdf(2.0)) == 0.0

    def test_standardisation(self, family):
        lo, hi = family.support
        pts = [0.0] if family.family == "laplace" else None
        for k, target in ((0, 1.0), (1, 0.0), (2, 1.0)):
            f = lambda z, k=k: z**k * float(family.pdf(z))
            if pts and not family.bounded:
                val = _quad(f, lo, 0.0) + _quad(f, 0.0, hi)
            else:
                val = _quad(f, lo, hi)
            assert abs(val - target) <= 1e-8

    def test_full_partial_moments(self, family):
        lo, hi = family.support
        assert abs(float(family.partial_first_moment(lo, hi))) <= 1e-8
        assert abs(float(family.partial_second_moment(lo, hi)) - 1.0) <= 1e-8

    def test_pdf_nonnegative_cdf_monotone(self, family):
        z = np.linspace(-8, 8, 4001)
        assert np.all(family.pdf(z) >= 0)
        assert np.all(np.diff(family.cdf(z)) >= 0)

    def test_roundtrip_cdf_quantile(self, family):
        rng = np.random.default_rng(11)
        u = rng.uniform(size=10_000)
        assert np.max(np.abs(family.cdf(family.quantile(u)) - u)) <= 1e-10

    def test_roundtrip_quantile_cdf(self, family):
        lo, hi = family.support
        z = np.linspace(max(lo, -5), min(hi, 5), 1001)[1:-1]
        assert np.max(np.abs(family.quantile(family.cdf(z)) - z)) <= 1e-9

    @pytest.mark.parametrize("name", FAMILIES)
    def test_partials_match_quadrature(self, name):
        d = make_standard(name)
        rng = np.random.default_rng(5)
        ab = np.sort(rng.uniform(-4, 4, size=(100, 2)), axis=1)
        for a, b in ab:
            m1 = mp_integral(name, lambda z: z, a, b)
            m2 = mp_integral(name, lambda z: z * z, a, b)
            assert abs(float(d.partial_first_moment(a, b)) - m1) <= 1e-9
            assert abs(float(d.partial_second_moment(a, b)) - m2) <= 1e-9


class TestQuantileNumeric:
    def test_gaussian_median(self):
        assert quantile_numeric(make_standard("gaussian"), 0.5) == pytest.approx(0.0, abs=1e-12)

    def test_uniform_quarter(self):
        assert quantile_numeric(make_standard("uniform"), 0.25) == pytest.approx(-SQRT3 / 2, abs=1e-12)

    def test_gaussian_975(self):
        mp.mp.dps = 30
        oracle = float(mp.sqrt(2) * mp.erfinv(2 * mp.mpf("0.975") - 1))
        assert quantile_numeric(make_standard("gaussian"), 0.975) == pytest.approx(oracle, abs=1e-11)

    @pytest.mark.parametrize("u", [0.0, 1.0, -0.1, 1.5])
    def test_rejects_bad_probability(self, u):
        with pytest.raises(QuantileError):
            quantile_numeric(make_standard("gaussian"), u)

    def test_bracket_bound(self):
        with pytest.raises(QuantileError):
            quantile_numeric(make_standard("gaussian"), 1 - 1e-15, max_bracket=4.0)

    @given(st.floats(min_value=1e-6, max_value=1 - 1e-6))
    @settings(max_examples=60, deadline=None)
    def test_residual(self, u):
        for name in FAMILIES:
            d = make_standard(name)
            z = quantile_numeric(d, u)
            assert abs(float(d.cdf(z)) - u) <= 1e-12


class TestCustom:
    def test_exponential_standardised(self, exponential_std):
        d = exponential_std
        lo, hi = d.support
        assert lo == pytest.approx(-1.0, abs=1e-10)
        vals = [_quad(lambda z, k=k: z**k * float(d.pdf(z)), lo, hi) for k in range(3)]
        assert vals == pytest.approx([1.0, 0.0, 1.0], abs=1e-8)
        assert d.fourth_moment == pytest.approx(9.0, abs=1e-8)

    def test_exponential_quantile_roundtrip(self, exponential_std):
        u = np.random.default_rng(3).uniform(size=10_000)
        assert np.max(np.abs(exponential_std.cdf(exponential_std.quantile(u)) - u)) <= 1e-10

    def test_gaussian_through_custom_path(self):
        d = make_custom(lambda z: np.exp(-0.5 * z * z))
        g = make_standard("gaussian")
        u = np.linspace(1e-6, 1 - 1e-6, 999)
        assert np.max(np.abs(d.quantile(u) - g.quantile(u))) <= 1e-7

    def test_shifted_gaussian_is_recentred(self):
        d = make_custom(lambda z: np.exp(-0.5 * ((z - 4.0) / 3.0) ** 2))
        assert d.meta["shift"] == pytest.approx(4.0, abs=1e-10)
        assert d.meta["scale"] == pytest.approx(3.0, abs=1e-10)

    def test_uniform_through_custom_path(self):
        d = make_custom(lambda z: np.ones_like(z), (0.0, 1.0))
        assert d.support == pytest.approx((-SQRT3, SQRT3), abs=1e-10)

    def test_custom_partials_match_builtin(self):
        d = make_custom(lambda z: np.exp(-np.abs(z)), breakpoints=[0.0])
        lap = make_standard("laplace")
        a = np.array([-np.inf, -3.0, -0.2, 0.5])
        b = np.array([-1.0, 0.7, 0.1, np.inf])
        assert np.max(np.abs(d.partial_first_moment(a, b) - lap.partial_first_moment(a, b))) <= 1e-10
        assert np.max(np.abs(d.partial_second_moment(a, b) - lap.partial_second_moment(a, b))) <= 1e-10

    def test_zero_pdf_rejected(self):
        with pytest.raises(DensityError):
            make_custom(lambda z: np.zeros_like(z), (0.0, 1.0))

    def test_negative_pdf_rejected(self):
        with pytest.raises(DensityError):
            make_custom(lambda z: z, (-1.0, 1.0))

    def test_heavy_tail_rejected(self):
        # Cauchy has no variance
        with pytest.raises(DensityError):
            make_custom(lambda z: 1.0 / (1.0 + z * z))

    def test_scalar_only_pdf(self):
        d = make_custom(lambda t: math.exp(-t) if t > 0 else 0.0, (0.0, math.inf))
        assert d.fourth_moment == pytest.approx(9.0, abs=1e-6)


class TestTabulated:
    def test_triangle(self, tmp_path):
        path = tmp_path / "tri.csv"
        path.write_text("z,f\n-1,0\n0,1\n1,0\n")
        d = load_tabulated(path)
        # symmetric triangular distribution has variance 1/6 before scaling
        assert d.meta["scale"] == pytest.approx(math.sqrt(1 / 6), abs=1e-12)
        assert d.support == pytest.approx((-math.sqrt(6), math.sqrt(6)), abs=1e-10)
        # fourth moment of a standardised triangle is 12/5
        assert d.fourth_moment == pytest.approx(2.4, abs=1e-9)
        u = np.linspace(0.01, 0.99, 99)
        assert np.max(np.abs(d.cdf(d.quantile(u)) - u)) <= 1e-12

    def test_long_table(self, tmp_path):
        # many rows means many breakpoints; quadrature must cope
        z = np.linspace(0.0, 40.0, 2001)
        path = tmp_path / "exp.csv"
        np.savetxt(path, np.column_stack([z, np.exp(-z)]), delimiter=",", header="z,f", comments="")
        d = load_tabulated(path)
        # exponential: mean 1, unit variance, standardised fourth moment 9
        assert d.meta["shift"] == pytest.approx(1.0, abs=1e-4)
        assert d.fourth_moment == pytest.approx(9.0, abs=1e-3)

    def test_duplicate_points_rejected(self, tmp_path):
        path = tmp_path / "atom.csv"
        path.write_text("0,1\n0,2\n1,1\n")
        with pytest.raises(DensityError):
            load_tabulated(path)


class TestLocationScaleModel:
    def test_density_formula(self, family):
        m = LocationScaleModel(family, 1.5, 2.5)
        x = np.linspace(-3, 6, 17)
        assert np.allclose(m.pdf(x), family.pdf((x - 1.5) / 2.5) / 2.5, rtol=0, atol=1e-15)

    def test_mean_and_variance(self, family):
        m = LocationScaleModel(family, -2.0, 0.7)
        lo, hi = m.support
        if not family.bounded:
            lo, hi = m.quantile(1e-15), m.quantile(1 - 1e-15)
        pts = [m.mu] if family.family == "laplace" else None
        f = lambda x, k: x**k * float(m.pdf(x))
        mean = integrate.quad(f, lo, hi, args=(1,), points=pts, epsabs=1e-13, limit=400)[0]
        var = integrate.quad(lambda x: (x - mean) ** 2 * float(m.pdf(x)), lo, hi, points=pts, epsabs=1e-13, limit=400)[0]
        assert mean == pytest.approx(-2.0, abs=1e-6)
        assert var == pytest.approx(0.49, abs=1e-6)

    def test_rejects_bad_sigma(self, family):
        with pytest.raises(ValueError):
            LocationScaleModel(family, 0.0, 0.0)
