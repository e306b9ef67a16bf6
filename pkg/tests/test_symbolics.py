"""Tests for Laurent arithmetic, plus-part evaluation, and gamma factors."""

import cmath
import math

import pytest

from lwl.residue import (
    FieldModel,
    MultChar,
    enumerate_unit_chars,
    gauss_integral,
    trivial_char,
)
from lwl.symbolics import (
    LaurentPoly,
    PiData,
    RationalLaurent,
    gamma_gl1_X,
    gamma_is_monomial,
    gamma_pi_X,
    gamma_pi_Y,
    pi_unramified,
    s_taylor,
)


@pytest.fixture
def F5():
    return FieldModel(5)


class TestLaurentPoly:
    def test_mul_and_eval(self):
        a = LaurentPoly({-1: 2.0, 1: 1.0})
        b = LaurentPoly({0: 1.0, 1: -1.0})
        prod = a * b
        x = 0.7 + 0.2j
        assert prod.eval(x) == pytest.approx(a.eval(x) * b.eval(x))

    def test_parts(self):
        a = LaurentPoly({-2: 1.0, 0: 3.0, 2: -1.0})
        assert a.negative_part().coeffs == {-2: 1.0}
        assert a.nonnegative_part().coeffs == {0: 3.0, 2: -1.0}

    def test_x_derivative(self):
        a = LaurentPoly({-2: 1.0, 3: 2.0})
        d = a.x_derivative()
        assert d.coeffs == {-2: -2.0, 3: 6.0}


class TestRationalLaurent:
    def test_series_matches_geometric(self):
        r = RationalLaurent(LaurentPoly.const(1.0), ((0.5 + 0j, 1),))
        coeffs = r.series_coefficients(6)
        for k in range(7):
            assert coeffs[k] == pytest.approx(0.5**k)

    def test_series_with_negative_numerator(self):
        r = RationalLaurent(LaurentPoly.monomial(-2), ((0.5 + 0j, 1),))
        coeffs = r.series_coefficients(3)
        assert coeffs[-2] == pytest.approx(1.0)
        assert coeffs[0] == pytest.approx(0.25)

    def test_derivative_matches_numeric(self):
        r = RationalLaurent(
            LaurentPoly({-1: 1.0, 2: 0.5}), ((0.3 + 0.1j, 2), (0.2 + 0j, 1))
        )
        d = r.derivative()
        x = 0.9 + 0.4j
        h = 1e-6
        numeric = (r.eval(x + h) - r.eval(x - h)) / (2 * h)
        assert d.eval(x) == pytest.approx(numeric, rel=1e-6)

    def test_add(self):
        a = RationalLaurent(LaurentPoly.const(1.0), ((0.5 + 0j, 1),))
        b = RationalLaurent(LaurentPoly.const(2.0), ((0.25 + 0j, 1),))
        s = a + b
        x = 0.8 + 0.1j
        assert s.eval(x) == pytest.approx(a.eval(x) + b.eval(x))

    def test_plus_part_exact_vs_series(self):
        r = RationalLaurent(
            LaurentPoly({-2: 1.5, -1: -0.5, 1: 2.0}), ((0.2 + 0.1j, 1),)
        )
        x = 1.3 + 0.2j  # inside the pole radius ~4.47
        exact = r.plus_part_eval(x, mode="exact")
        series = r.plus_part_eval(x, mode="series", tol=1e-13)
        assert exact == pytest.approx(series, rel=1e-9)

    def test_plus_plus_minus_is_whole(self):
        r = RationalLaurent(
            LaurentPoly({-3: 1.0, 0: 1.0}), ((0.4 + 0j, 1),)
        )
        x = 1.1 - 0.3j
        plus = r.plus_part_eval(x)
        minus = r.negative_coefficients().eval(x)
        assert plus + minus == pytest.approx(r.eval(x))


class TestSTaylor:
    def test_against_finite_differences(self):
        q = 5
        r = RationalLaurent(
            LaurentPoly({-1: 1.0, 1: 0.5}), ((0.3 + 0j, 1),)
        )
        x0 = 1.2 + 0.1j
        coeffs = s_taylor(r, q, x0, 2)

        def f(s):
            return r.eval(x0 * q**s)

        h = 1e-5
        assert coeffs[0] == pytest.approx(f(0))
        assert coeffs[1] == pytest.approx((f(h) - f(-h)) / (2 * h), rel=1e-6)
        assert coeffs[2] == pytest.approx(
            (f(h) - 2 * f(0) + f(-h)) / (2 * h * h), rel=1e-4
        )


class TestGammaGL1:
    def test_unramified_shape(self, F5):
        chi = trivial_char(F5, at_pi=1.0 + 0j)
        g = gamma_gl1_X(F5, chi)
        # a single pole and the zero at X = z
        assert g.den == ((0.2 + 0j, 1),)
        assert g.num.coeffs[-1] == pytest.approx(-1.0)

    def test_ramified_is_monomial(self, F5):
        for chi in enumerate_unit_chars(F5, 2, conductor=2):
            g = gamma_gl1_X(F5, chi.with_at_pi(1.0 + 0j))
            assert gamma_is_monomial(g)
            assert g.num.support == (-2, -2)

    def test_functional_equation(self, F5):
        # gamma(s, chi) gamma(1-s, 1/chi) = chi(-1)
        for chi in list(enumerate_unit_chars(F5, 2))[::3]:
            full = chi.with_at_pi(cmath.exp(0.7j))
            g1 = gamma_gl1_X(F5, full)
            g2 = gamma_gl1_X(F5, full.inverse())
            x = 2.0 * cmath.exp(0.3j)  # X = q^s, arbitrary regular point
            got = g1.eval(x) * g2.eval(F5.q / x)
            assert got == pytest.approx(chi.eval_unit(-1))

    def test_value_at_one_is_gauss_integral(self, F5):
        # at s = 1 the gamma factor of 1/chi equals the normalized Gauss
        # sum of chi at its conductor
        for chi in enumerate_unit_chars(F5, 2, conductor=2):
            full = chi.with_at_pi(cmath.exp(1.1j))
            g = gamma_gl1_X(F5, full.inverse())
            want = gauss_integral(F5, full, 2)
            assert g.eval(F5.q + 0j) == pytest.approx(want)

    def test_stability_gamma_identity(self, F5):
        # gamma(s,chi)^3 zeta(1) gamma(3/2-s,1/chi)^2 = zeta(1) gamma(s+1,chi)
        zeta1 = F5.zeta1
        for chi in enumerate_unit_chars(F5, 2, conductor=2):
            full = chi.with_at_pi(cmath.exp(0.4j))
            g = gamma_gl1_X(F5, full)
            ginv = gamma_gl1_X(F5, full.inverse())
            for x in (1.5 + 0.2j, 0.8 - 0.5j):
                lhs = g.eval(x) ** 3 * zeta1 * ginv.eval(F5.q**1.5 / x) ** 2
                rhs = zeta1 * g.eval(F5.q * x)
                assert lhs == pytest.approx(rhs)


class TestPiData:
    def test_unramified_triple(self, F5):
        pi = pi_unramified(F5, (1j, -1j, 1))
        assert pi.conductor_exponent == 0
        assert pi.degree_unramified == 3
        assert pi.rho == 3
        assert pi.stability_barrier == 2

    def test_ramified_triple(self, F5):
        mu = MultChar(F5, 1, 1)
        pi = PiData(F5, (mu, mu.inverse(), trivial_char(F5)), (1, 1, 1))
        assert pi.conductor_exponent == 2
        assert pi.degree_unramified == 1
        assert pi.rho == 3
        assert pi.stability_barrier == 2

    def test_central_character_enforced(self, F5):
        mu = MultChar(F5, 1, 1)
        with pytest.raises(ValueError):
            PiData(F5, (mu, mu, mu), (1, 1, 1))
        with pytest.raises(ValueError):
            pi_unramified(F5, (2, 1, 1))

    def test_gamma_pi_is_product(self, F5):
        pi = pi_unramified(F5, (1j, -1j, 1))
        chi = MultChar(F5, 1, 2, at_pi=cmath.exp(0.9j))
        g = gamma_pi_X(pi, chi)
        x = 1.4 + 0.3j
        expect = 1.0 + 0j
        for mu, z in zip(pi.mus, pi.zs):
            factor = gamma_gl1_X(
                F5, (mu * chi.unit_part()).with_at_pi(z * chi.at_pi)
            )
            expect *= factor.eval(x)
        assert g.eval(x) == pytest.approx(expect)

    def test_gamma_Y_drops_twist_scalar(self, F5):
        # the Y-variable multiplier must reproduce gamma at X = z Y for any
        # uniformizer value z of the twist
        pi = pi_unramified(F5, (1j, -1j, 1))
        xi = MultChar(F5, 1, 1)
        gy = gamma_pi_Y(pi, xi)
        for z in (cmath.exp(0.3j), cmath.exp(-1.2j)):
            gx = gamma_pi_X(pi, xi.with_at_pi(z))
            for y in (1.5 + 0.1j, 0.7 - 0.2j):
                assert gy.eval(y) == pytest.approx(gx.eval(z * y))

    def test_gamma_Y_monomial_iff_all_twists_ramified(self, F5):
        mu = MultChar(F5, 1, 1)
        pi = PiData(F5, (mu, mu.inverse(), trivial_char(F5)), (1, 1, 1))
        xi_deep = MultChar(F5, 2, 1)  # conductor 2: all products ramified
        assert gamma_is_monomial(gamma_pi_Y(pi, xi_deep))
        xi_shallow = mu.inverse()  # cancels one component
        assert not gamma_is_monomial(gamma_pi_Y(pi, xi_shallow))
