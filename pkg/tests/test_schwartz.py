"""Tests for shell functions, operators, and the oscillatory families."""

import json
from pathlib import Path

import pytest

from lwl.residue import (
    FieldModel,
    MultChar,
    enumerate_unit_chars,
    eta0_char,
    legendre,
    psi_vu,
)
from lwl.schwartz import (
    ShellFunction,
    TruncationUnsound,
    convolve,
    coset_indicator,
    quad_plain_shell,
    quad_twisted_shell,
    stationary_shell,
    stationary_tail,
    unit_shell_indicator,
)

ORACLES = json.loads(
    (Path(__file__).parent / "frozen_oracles.json").read_text()
)


def c(pair):
    return complex(pair[0], pair[1])


@pytest.fixture
def F5():
    return FieldModel(5)


# ----------------------------------------------------------------------
# core container and operators
# ----------------------------------------------------------------------


class TestShellFunction:
    def test_refine_preserves_integrals(self, F5):
        sf = unit_shell_indicator(F5, -2)
        fine = sf.refine(2)
        assert sf.d_mult_integral() == pytest.approx(1.0)
        assert fine.d_mult_integral() == pytest.approx(1.0)

    def test_add_and_scale(self, F5):
        a = unit_shell_indicator(F5, 0)
        b = coset_indicator(F5, 0, 1, 1).scale(2.0)
        s = a + b
        assert s.value_vu(0, 1) == pytest.approx(3.0)
        assert s.value_vu(0, 2) == pytest.approx(1.0)
        assert s.d_mult_integral() == pytest.approx(1.0 + 2 * F5.coset_volume(1))

    def test_translate(self, F5):
        sf = coset_indicator(F5, 0, 2, 1)
        # g(y) = f(3y) puts the mass where 3y is in the coset of 2
        g = sf.translate(0, 3)
        want = 2 * pow(3, -1, 5) % 5
        assert g.value_vu(0, want) == pytest.approx(1.0)
        assert g.value_vu(0, 2) == 0

    def test_translate_by_uniformizer_power(self, F5):
        sf = unit_shell_indicator(F5, -3)
        g = sf.translate(-1, 1)
        assert g.shells() == [-2]

    def test_invert_argument(self, F5):
        sf = coset_indicator(F5, 2, 3, 1)
        g = sf.invert_argument()
        assert g.value_vu(-2, pow(3, -1, 5)) == pytest.approx(1.0)

    def test_times_abs_power(self, F5):
        sf = unit_shell_indicator(F5, -2)
        g = sf.times_abs_power(0.5)
        assert g.value_vu(-2, 1) == pytest.approx(5.0)

    def test_times_psi_refines(self, F5):
        sf = unit_shell_indicator(F5, 0)
        g = sf.times_psi(-2, 1)
        assert g.level >= 2
        assert g.value_vu(0, 7) == pytest.approx(psi_vu(F5, -2, 7))
        # the full-shell integral of psi at level -2 over units vanishes
        assert g.d_mult_integral() == pytest.approx(0.0, abs=1e-12)

    def test_times_char(self, F5):
        chi = MultChar(F5, 1, 1)
        sf = unit_shell_indicator(F5, 0)
        g = sf.times_char(chi)
        assert g.d_mult_integral() == pytest.approx(0.0, abs=1e-12)
        assert g.d_mult_integral(unit_char=chi.inverse()) == pytest.approx(1.0)

    def test_restrict_v_certifies(self, F5):
        sf = stationary_tail(F5, 2, 4)
        assert not sf.exact_lo
        cut = sf.restrict_v(lo=-6)
        assert cut.exact_lo
        assert cut.shells() == [-6, -4]

    def test_strict_integration_raises_on_open_edge(self, F5):
        sf = stationary_tail(F5, 2, 4)
        with pytest.raises(TruncationUnsound):
            sf.d_mult_integral()
        # bounded away from the open edge it is fine
        val = sf.d_mult_integral(v_range=(-6, None))
        assert isinstance(val, complex)

    def test_mellin_coefficients_keys(self, F5):
        sf = stationary_shell(F5, 2)
        coeffs = sf.mellin_coefficients()
        assert set(coeffs) <= {4}


# ----------------------------------------------------------------------
# convolution
# ----------------------------------------------------------------------


def geometric_factor(F, depth):
    """f(-1) = -1, f(v) = (1 - 1/q) q^{-v} for 0 <= v <= depth, open above."""
    sf = ShellFunction(F, 0, {}, True, False)
    sf.set(-1, 1, -1.0)
    for v in range(depth + 1):
        sf.set(v, 1, (1 - 1 / F.q) * F.q ** (-v))
    return sf


class TestConvolve:
    def test_triple_convolution_matches_oracle(self, F5):
        depth = 12
        f = geometric_factor(F5, depth)
        ff = convolve(f, f, range(-2, 6))
        fff = convolve(ff, f, range(-3, 4))
        table = ORACLES["conv_f123"]["5"]
        for v in range(-3, 4):
            assert fff.value_vu(v, 1) == pytest.approx(
                c(table[str(v)]), abs=1e-12
            )

    def test_unsound_when_too_shallow(self, F5):
        f = geometric_factor(F5, 2)
        with pytest.raises(TruncationUnsound):
            ff = convolve(f, f, range(-2, 6))
            convolve(ff, f, range(-3, 4))

    def test_delta_is_identity(self, F5):
        # a unit-mass bump at 1, at finer level than g, acts as identity
        lvl = 2
        delta = coset_indicator(F5, 0, 1, lvl).scale(1 / F5.coset_volume(lvl))
        g = stationary_shell(F5, 1)
        got = convolve(delta, g, g.shells())
        for u in F5.unit_reps(1):
            assert got.value_vu(-2, u) == pytest.approx(
                g.value_vu(-2, u), abs=1e-12
            )


# ----------------------------------------------------------------------
# oscillatory families
# ----------------------------------------------------------------------


class TestStationaryFamily:
    def test_matches_frozen_oracle(self, F5):
        table = ORACLES["em_values"]["5"]
        for m in (0, 1, 2, 3):
            sf = stationary_shell(F5, m)
            for uy in (1, 2):
                ux = uy * uy % 5 ** max(m, 1)
                want = c(table[f"{m},{uy}"])
                assert sf.value_vu(-2 * m, ux) == pytest.approx(want)

    def test_level_zero_constant(self, F5):
        sf = stationary_shell(F5, 0)
        assert sf.value_vu(0, 1) == pytest.approx(2 * (1 - 1 / 5))
        assert sf.value_vu(0, 4) == pytest.approx(2 * (1 - 1 / 5))
        assert sf.value_vu(0, 2) == 0

    def test_supported_on_squares_only(self, F5):
        sf = stationary_shell(F5, 2)
        for (v, u) in sf.data:
            assert v == -4
            assert legendre(u, 5) == 1

    def test_unit_char_support_is_conductor_m(self, F5):
        # the shell integral against a unit character is nonzero exactly
        # for characters of conductor m (m >= 2)
        for m in (2, 3):
            sf = stationary_shell(F5, m)
            for xi in enumerate_unit_chars(F5, m):
                val = sf.mellin_shell(2 * m, xi)
                if xi.conductor == m:
                    assert abs(val) > 1e-9
                else:
                    assert abs(val) < 1e-12

    def test_tail_window(self, F5):
        sf = stationary_tail(F5, 2, 5)
        assert sf.shells() == [-10, -8, -6, -4]
        assert sf.exact_hi and not sf.exact_lo


class TestQuadraticFamilies:
    def test_plain_level_zero(self, F5):
        sf = quad_plain_shell(F5, 0)
        assert sf.value_vu(0, 4) == pytest.approx(2.0)
        assert sf.value_vu(0, 3) == 0

    def test_plain_value(self, F5):
        sf = quad_plain_shell(F5, 1)
        got = sf.value_vu(-2, 4)
        want = psi_vu(F5, -1, 2) + psi_vu(F5, -1, -2)
        assert got == pytest.approx(want)

    def test_plain_mellin_identity(self, F5):
        # the shell integral against chi equals the integral of
        # psi(y) chi^2(y) over the shell v(y) = -n carrying the square root
        for n in (1, 2):
            f = quad_plain_shell(F5, n)
            for xi in enumerate_unit_chars(F5, n):
                lhs = f.mellin_shell(2 * n, xi)
                cvol = F5.coset_volume(max(n, 1))
                rhs = sum(
                    psi_vu(F5, -n, u) * (xi * xi).eval_unit(u)
                    for u in F5.unit_reps(max(n, 1))
                ) * cvol
                assert lhs == pytest.approx(rhs, abs=1e-12)

    def test_twisted_level_zero_vanishes_unless_minus_one_square(self):
        F5, F7 = FieldModel(5), FieldModel(7)
        assert quad_twisted_shell(F5, 0).data  # -1 is a square mod 5
        assert not quad_twisted_shell(F7, 0).data

    def test_twisted_value(self, F5):
        sf = quad_twisted_shell(F5, 1)
        uy = 2
        got = sf.value_vu(-2, 4)
        want = legendre(2, 5) * psi_vu(F5, -1, 2) + legendre(-2, 5) * psi_vu(
            F5, -1, -2
        )
        assert got == pytest.approx(want)

    def test_twisted_mellin_identity(self, F5):
        # the shell integral against chi equals the integral of
        # psi(y) eta(y) chi^2(y) over the square-root shell, where eta is
        # the quadratic character of the ramified extension
        for n in (1, 2):
            tw = quad_twisted_shell(F5, n)
            cvol = F5.coset_volume(max(n, 1))
            for xi in enumerate_unit_chars(F5, n):
                lhs = tw.mellin_shell(2 * n, xi)
                rhs = sum(
                    psi_vu(F5, -n, u)
                    * legendre(-1, 5) ** n
                    * legendre(u, 5)
                    * (xi * xi).eval_unit(u)
                    for u in F5.unit_reps(max(n, 1))
                ) * cvol
                assert lhs == pytest.approx(rhs, abs=1e-12)
