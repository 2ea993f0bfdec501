import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import minimize_scalar

from kakeya_lab.errors import InputError
from kakeya_lab.exponent import ConstantExponent, PiecewiseExponent, two_square_exponent
from kakeya_lab.field import Box, DomainSpec, RectangleSpec, ScalarField2D, indicator
from kakeya_lab.vnorm import (
    BoundaryWarning,
    holder_check,
    luxemburg_norm,
    modular,
    norm_product_over_measure,
)

UNIT16 = DomainSpec.from_bounds(0, 0, 1, 1, 1 / 16)
PAD = DomainSpec.from_bounds(-0.25, -0.25, 1.25, 1.25, 1 / 16)


def field_from(domain, fn):
    X, Y = domain.centers()
    return ScalarField2D(domain, fn(X, Y))


fields = st.builds(
    lambda seed, scale: ScalarField2D(PAD, scale * np.random.default_rng(seed).standard_normal(PAD.shape)),
    st.integers(0, 2**31),
    st.floats(0.01, 100),
)
exponents = st.builds(
    lambda a, b: PiecewiseExponent([(Box(0, 0, 0.5, 1), a), (Box(0.5, 0, 1, 1), b)], (a + b) / 2),
    st.floats(1.1, 8),
    st.floats(1.1, 8),
)


class TestModular:
    def test_constant_one(self):
        assert modular(ScalarField2D(UNIT16, np.ones(UNIT16.shape)), ConstantExponent(2)).value == pytest.approx(1.0)

    def test_scaling(self):
        f = ScalarField2D(UNIT16, np.full(UNIT16.shape, 2.0))
        assert modular(f, ConstantExponent(3), lam=2.0).value == pytest.approx(1.0)
        assert modular(f, ConstantExponent(3)).value == pytest.approx(8.0)

    def test_zero(self):
        assert modular(ScalarField2D(UNIT16, np.zeros(UNIT16.shape)), ConstantExponent(2)).value == 0

    def test_overflow_flags_infinite(self):
        f = ScalarField2D(UNIT16, np.full(UNIT16.shape, 1e200))
        assert not modular(f, ConstantExponent(4)).finite

    def test_bad_lambda(self):
        with pytest.raises(InputError):
            modular(ScalarField2D(UNIT16, np.ones(UNIT16.shape)), ConstantExponent(2), lam=0)


class TestNorm:
    def test_unit_indicator(self):
        chi = ScalarField2D(UNIT16, np.ones(UNIT16.shape))
        assert luxemburg_norm(chi, ConstantExponent(3)) == pytest.approx(1.0, rel=1e-10)

    def test_constant_exponent_matches_lp(self):
        # 3 on a square of area 1/16 has L^4 norm 3 * (1/16)^(1/4)
        f = field_from(UNIT16, lambda x, y: 3.0 * ((x < 0.25) & (y < 0.25)))
        assert luxemburg_norm(f, ConstantExponent(4)) == pytest.approx(1.5, rel=1e-10)

    def test_two_piece_closed_form(self):
        p = PiecewiseExponent([(Box(0, 0, 0.5, 1), 2.0), (Box(0.5, 0, 1, 1), 4.0)], 3.0)
        f = field_from(UNIT16, lambda x, y: np.where(y < 0.75, 1.0, 0.0))
        a = b = 0.375
        # rho(f/lam) = a u + b u^2 with u = lam^-2
        u = (-a + math.sqrt(a * a + 4 * b)) / (2 * b)
        closed = u**-0.5
        value = luxemburg_norm(f, p)
        assert value == pytest.approx(closed, rel=1e-9)
        golden = minimize_scalar(
            lambda lam: abs(modular(f, p, lam).value - 1.0), bracket=(0.5, 1.0, 2.0), method="golden", tol=1e-12
        )
        assert golden.x == pytest.approx(value, rel=1e-6)

    @given(fields, exponents, st.floats(-50, 50).filter(lambda c: abs(c) > 1e-3))
    def test_homogeneous(self, f, p, c):
        a = luxemburg_norm(f.with_values(c * f.values), p)
        assert a == pytest.approx(abs(c) * luxemburg_norm(f, p), rel=1e-8)

    @given(fields, exponents)
    def test_unit_modular_at_the_norm(self, f, p):
        lam = luxemburg_norm(f, p, tol=1e-12)
        assert modular(f, p, lam).value == pytest.approx(1.0, rel=1e-9)

    @given(fields, exponents, st.sampled_from([1e-10, 1e-8, 1e-6]))
    def test_norm_is_the_infimum(self, f, p, tol):
        lam = luxemburg_norm(f, p, tol=tol)
        assert modular(f, p, lam).value <= 1 + 1e-12
        assert modular(f, p, (1 - 10 * tol) * lam).value > 1

    @given(fields, exponents, st.integers(0, 2**31))
    def test_monotone(self, f, p, seed):
        shrink = np.random.default_rng(seed).random(f.values.shape)
        assert luxemburg_norm(f.with_values(f.values * shrink), p) <= luxemburg_norm(f, p) * (1 + 1e-9)

    @given(fields, fields, exponents)
    def test_triangle(self, f, g, p):
        lhs = luxemburg_norm(f.with_values(f.values + g.values), p)
        assert lhs <= (luxemburg_norm(f, p) + luxemburg_norm(g, p)) * (1 + 1e-9)

    def test_zero(self):
        assert luxemburg_norm(ScalarField2D(UNIT16, np.zeros(UNIT16.shape)), ConstantExponent(2)) == 0

    def test_bad_tol(self):
        with pytest.raises(InputError):
            luxemburg_norm(ScalarField2D(UNIT16, np.ones(UNIT16.shape)), ConstantExponent(2), tol=0)

    def test_boundary_modes(self):
        chi = ScalarField2D(UNIT16, np.ones(UNIT16.shape))
        with pytest.warns(BoundaryWarning):
            luxemburg_norm(chi, ConstantExponent(2), boundary="warn")
        with pytest.raises(InputError):
            luxemburg_norm(chi, ConstantExponent(2), boundary="raise")
        inner = indicator(Box(0.2, 0.2, 0.8, 0.8), UNIT16)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            luxemburg_norm(inner, ConstantExponent(2), boundary="raise")


class TestHolder:
    def test_constant_functions(self):
        one = ScalarField2D(UNIT16, np.ones(UNIT16.shape))
        lhs, rhs = holder_check(one, one, ConstantExponent(2))
        assert lhs == pytest.approx(1.0) and rhs == pytest.approx(2.0)

    def test_zero_partner(self):
        one = ScalarField2D(UNIT16, np.ones(UNIT16.shape))
        assert holder_check(one, one.with_values(np.zeros(UNIT16.shape)), ConstantExponent(2)) == (0.0, 0.0)

    def test_mismatched_domains(self):
        with pytest.raises(InputError):
            holder_check(ScalarField2D(UNIT16, np.ones(UNIT16.shape)), ScalarField2D(PAD, np.ones(PAD.shape)), ConstantExponent(2))

    @given(fields, fields, exponents)
    def test_inequality(self, f, g, p):
        lhs, rhs = holder_check(f, g, p)
        assert lhs <= rhs * (1 + 1e-9)


class TestNormProduct:
    @given(st.floats(1.1, 10), st.floats(0.01, 3), st.floats(1.01, 40), st.floats(0, math.pi))
    def test_constant_exponent_gives_one(self, p, length, ecc, theta):
        R = RectangleSpec((0.3, -0.2), theta, length, ecc)
        assert norm_product_over_measure(R, ConstantExponent(p)) == pytest.approx(1.0, rel=1e-8)

    def test_variable_exponent_at_least_half(self):
        p = two_square_exponent(0.4, 0.9, 2, 4)
        for N in (4, 16, 64):
            R = RectangleSpec.axis_aligned(0, 0, 0.9 / N, 0.9)
            res = norm_product_over_measure(R, p, detail=True)
            assert res.value >= 0.5
            assert res.area == pytest.approx(R.area, rel=1e-12)

    def test_on_grid_uses_quadrature_area(self):
        R = RectangleSpec.axis_aligned(0, 0, 0.5, 0.25)
        res = norm_product_over_measure(R, ConstantExponent(3), domain=UNIT16, detail=True)
        assert res.area == pytest.approx(0.125)
        assert res.value == pytest.approx(1.0, rel=1e-9)

    def test_on_grid_missing_every_center(self):
        R = RectangleSpec.axis_aligned(0.001, 0.001, 0.02, 0.01)
        with pytest.raises(InputError):
            norm_product_over_measure(R, ConstantExponent(3), domain=UNIT16)
