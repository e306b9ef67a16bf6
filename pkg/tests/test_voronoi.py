"""Transform pipeline against independent closed-form images.

The pipeline computes the Hankel-type transform per unit character from
gamma multipliers; the closed forms come from stationary-phase and Gauss
sum evaluations. Agreement between the two routes, shell by shell, is the
point of every test here.
"""

import cmath
import math

import pytest

from lwl.residue import FieldModel, MultChar, enumerate_unit_chars, legendre, tau0
from lwl.schwartz import (
    ShellFunction,
    TruncationUnsound,
    quad_plain_shell,
    quad_twisted_shell,
    stationary_shell,
    stationary_tail,
)
from lwl.symbolics import gamma_gl1_X, gamma_pi_X, pi_unramified
from lwl.voronoi import (
    geometric_factor,
    hyper_kernel,
    quad_plain_image,
    quad_plain_image_unstable,
    quad_twisted_image,
    quad_twisted_image_unstable,
    stationary_image,
    stationary_tail_image,
    tail_mass_bound,
    vh_transform,
)

TOL = 1e-8


def unimodular_triple(a: float = 0.37, b: float = 0.152) -> tuple[complex, ...]:
    z1 = cmath.exp(2j * math.pi * a)
    z2 = cmath.exp(2j * math.pi * b)
    return (z1, z2, 1 / (z1 * z2))


def max_rel_diff(g: ShellFunction, h: ShellFunction, shells) -> float:
    """Largest pointwise difference over the given shells, relative to the
    largest value either side attains there."""
    level = max(g.level, h.level, 1)
    ga = g.refine(level)
    ha = h.refine(level)
    worst = 0.0
    scale = 1.0
    for v in shells:
        for u in ga.F.unit_reps(level):
            a = ga.value_vu(v, u)
            b = ha.value_vu(v, u)
            worst = max(worst, abs(a - b))
            scale = max(scale, abs(a), abs(b))
    return worst / scale


def mellin_pairing(f: ShellFunction, chi: MultChar, s: complex) -> complex:
    """Sum over certified shells of the multiplicative pairing with
    chi(y)|y|^s, using the character's uniformizer value."""
    z = chi.at_pi if chi.at_pi is not None else 1.0 + 0j
    total = 0j
    for v in sorted(f.shells()):
        a = f.mellin_shell(-v, chi)
        total += a * z**v * complex(f.F.q) ** (-v * s)
    return total


class TestStationaryStable:
    @pytest.mark.parametrize("p", [5, 7])
    @pytest.mark.parametrize("m", [2, 3])
    def test_image_is_additive_character_on_one_shell(self, p, m):
        F = FieldModel(p)
        pi = pi_unramified(F, unimodular_triple())
        f = stationary_shell(F, m).times_abs_power(-1)
        g = vh_transform(pi, f)
        assert g.exact_lo and g.exact_hi
        assert set(g.shells()) == {-m}
        assert max_rel_diff(g, stationary_image(F, m), [-m]) < TOL

    @pytest.mark.parametrize("m", [2, 3])
    def test_image_does_not_depend_on_satake_parameters(self, m):
        F = FieldModel(5)
        f = stationary_shell(F, m).times_abs_power(-1)
        g1 = vh_transform(pi_unramified(F, unimodular_triple()), f)
        g2 = vh_transform(
            pi_unramified(F, unimodular_triple(0.081, 0.6113)), f
        )
        assert max_rel_diff(g1, g2, [-m]) < TOL

    @pytest.mark.parametrize("m", [2, 3])
    def test_dual_transform_gives_same_image(self, m):
        F = FieldModel(5)
        pi = pi_unramified(F, unimodular_triple())
        f = stationary_shell(F, m).times_abs_power(-1)
        g = vh_transform(pi, f, dual=True)
        assert max_rel_diff(g, stationary_image(F, m), [-m]) < TOL

    def test_finite_tail_sum_telescopes(self):
        F = FieldModel(5)
        pi = pi_unramified(F, unimodular_triple())
        n, depth = 2, 4
        f = stationary_shell(F, n).times_abs_power(-1)
        for m in range(n + 1, depth + 1):
            f = f + stationary_shell(F, m).times_abs_power(-1)
        g = vh_transform(pi, f, dual=True)
        expected = stationary_tail_image(F, n, depth)
        assert max_rel_diff(g, expected, range(-depth, -n + 1)) < TOL

    @pytest.mark.parametrize("m", [2, 3])
    def test_mellin_content_squares_abelian_gamma(self, m):
        F = FieldModel(5)
        E = stationary_shell(F, m)
        z = cmath.exp(2j * math.pi * 0.3)
        x_half = math.sqrt(F.q)
        seen = 0
        for xi in enumerate_unit_chars(F, m, conductor=m):
            if seen >= 4:
                break
            seen += 1
            chi = xi.with_at_pi(z)
            lhs = z ** (-2 * m) * E.mellin_shell(2 * m, chi)
            gam = gamma_gl1_X(F, chi.inverse()).eval(x_half)
            rhs = F.zeta1 * gam * gam
            assert abs(lhs - rhs) <= TOL * max(1.0, abs(rhs))


class TestQuadraticStable:
    @pytest.mark.parametrize("p", [5, 7])
    @pytest.mark.parametrize("n", [2, 3])
    def test_plain_family(self, p, n):
        F = FieldModel(p)
        pi = pi_unramified(F, unimodular_triple())
        g = vh_transform(pi, quad_plain_shell(F, n))
        assert g.exact_lo and g.exact_hi
        assert set(g.shells()) == {-n}
        assert max_rel_diff(g, quad_plain_image(F, n), [-n]) < TOL

    @pytest.mark.parametrize("p", [5, 7])
    @pytest.mark.parametrize("n", [2, 3])
    def test_twisted_family(self, p, n):
        F = FieldModel(p)
        pi = pi_unramified(F, unimodular_triple())
        g = vh_transform(pi, quad_twisted_shell(F, n))
        assert g.exact_lo and g.exact_hi
        assert set(g.shells()) == {-n}
        assert max_rel_diff(g, quad_twisted_image(F, n), [-n]) < TOL

    def test_even_conductor_gamma_relation(self):
        # chi(4) gamma(1/2, chi) = gamma(1/2, chi)^3 gamma(1/2, chi^{-2})
        # for even conductor >= 2: Mellin content of the plain stable image
        # (one shell, argument shifted by 4) matched against the gamma side
        F = FieldModel(5)
        x_half = math.sqrt(F.q)
        z = cmath.exp(2j * math.pi * 0.123)
        for xi in enumerate_unit_chars(F, 2, conductor=2):
            chi = xi.with_at_pi(z)
            lhs = chi.eval_unit(4) * gamma_gl1_X(F, chi).eval(x_half)
            rhs = gamma_gl1_X(F, chi).eval(x_half) ** 3 * gamma_gl1_X(
                F, (chi * chi).inverse()
            ).eval(x_half)
            assert abs(lhs - rhs) <= TOL * max(1.0, abs(rhs))


class TestBelowStable:
    def setup_method(self):
        self.F = FieldModel(5)
        self.pi = pi_unramified(self.F, unimodular_triple())
        self.window = list(range(-6, 4))

    def test_plain_level_zero(self):
        g = vh_transform(self.pi, quad_plain_shell(self.F, 0), out_hi=3)
        assert g.exact_lo and not g.exact_hi
        h = quad_plain_image_unstable(self.pi, 0, self.window)
        assert max_rel_diff(g, h, self.window) < TOL

    def test_plain_level_zero_extended_window(self):
        g = vh_transform(self.pi, quad_plain_shell(self.F, 0), out_hi=9)
        h = quad_plain_image_unstable(self.pi, 0, list(range(-6, 10)))
        assert max_rel_diff(g, h, range(-6, 10)) < TOL

    def test_plain_level_zero_deep_point(self):
        # on the deepest shell the image is the pure convolution point
        # -prod(z) = -1 plus the quadratic Gauss term
        g = vh_transform(self.pi, quad_plain_shell(self.F, 0), out_hi=3)
        t0 = tau0(self.F)
        for u in self.F.unit_reps(1):
            expected = -1 + t0 * self.F.q**2 * legendre(-u, self.F.p)
            assert abs(g.value_vu(-3, u) - expected) < TOL * 30

    def test_plain_level_one(self):
        g = vh_transform(self.pi, quad_plain_shell(self.F, 1), out_hi=3)
        h = quad_plain_image_unstable(self.pi, 1, self.window)
        assert max_rel_diff(g, h, self.window) < TOL

    def test_plain_level_one_extended_window(self):
        g = vh_transform(self.pi, quad_plain_shell(self.F, 1), out_hi=9)
        h = quad_plain_image_unstable(self.pi, 1, list(range(-6, 10)))
        assert max_rel_diff(g, h, range(-6, 10)) < TOL

    def test_twisted_level_zero_quartic_pair(self):
        g = vh_transform(self.pi, quad_twisted_shell(self.F, 0))
        # the only content is the two quartic characters, both with
        # monomial multipliers, so the image is exact on one shell
        assert g.exact_lo and g.exact_hi
        assert set(g.shells()) == {-3}
        h = quad_twisted_image_unstable(self.pi, 0, self.window)
        assert max_rel_diff(g, h, self.window) < TOL

    def test_twisted_level_zero_empty_when_minus_one_not_square(self):
        F = FieldModel(7)
        pi = pi_unramified(F, unimodular_triple())
        g = vh_transform(pi, quad_twisted_shell(F, 0))
        assert not g.shells()
        h = quad_twisted_image_unstable(pi, 0, self.window)
        assert not [v for v in h.shells()]

    def test_twisted_level_one(self):
        g = vh_transform(self.pi, quad_twisted_shell(self.F, 1), out_hi=3)
        h = quad_twisted_image_unstable(self.pi, 1, self.window)
        assert max_rel_diff(g, h, self.window) < TOL

    def test_twisted_level_one_extended_window(self):
        g = vh_transform(self.pi, quad_twisted_shell(self.F, 1), out_hi=9)
        h = quad_twisted_image_unstable(self.pi, 1, list(range(-6, 10)))
        assert max_rel_diff(g, h, range(-6, 10)) < TOL

    def test_tail_bound_decays_below_tolerance(self):
        f = quad_plain_shell(self.F, 0)
        t3 = tail_mass_bound(self.pi, f, 3)
        t9 = tail_mass_bound(self.pi, f, 9)
        t15 = tail_mass_bound(self.pi, f, 15)
        assert t9 < t3
        assert t15 < TOL

    def test_tail_bound_vanishes_in_stable_range(self):
        assert tail_mass_bound(self.pi, quad_plain_shell(self.F, 2), 0) == 0.0


class TestDefiningRelation:
    @pytest.mark.parametrize("s", [0.5, 0.37])
    def test_ramified_twist_exact(self, s):
        F = FieldModel(5)
        pi = pi_unramified(F, unimodular_triple())
        f = quad_plain_shell(F, 2)
        g = vh_transform(pi, f)
        z = cmath.exp(2j * math.pi * 0.21)
        x0 = F.q**s
        checked = 0
        for xi in enumerate_unit_chars(F, 2, conductor=2):
            if checked >= 3:
                break
            chi = xi.with_at_pi(z)
            rhs_in = mellin_pairing(f, chi, s)
            if abs(rhs_in) < 1e-12:
                continue
            checked += 1
            lhs = mellin_pairing(g, chi.inverse(), -s)
            gam = gamma_pi_X(pi, chi).eval(x0)
            assert abs(lhs - gam * rhs_in) <= TOL * max(1.0, abs(lhs))
        assert checked == 3

    def test_unramified_twist_with_truncation(self):
        F = FieldModel(5)
        pi = pi_unramified(F, unimodular_triple())
        f = quad_plain_shell(F, 0)
        g = vh_transform(pi, f, out_hi=15)
        s = -0.25
        z = cmath.exp(2j * math.pi * 0.4)
        chi = MultChar(F, 1, 0, at_pi=z)
        lhs = mellin_pairing(g, chi.inverse(), -s)
        rhs = gamma_pi_X(pi, chi).eval(F.q**s) * mellin_pairing(f, chi, s)
        slack = tail_mass_bound(pi, f, 15) + 1e-9 * max(1.0, abs(rhs))
        assert abs(lhs - rhs) <= slack


class TestGuards:
    def test_open_low_edge_input_rejected(self):
        F = FieldModel(5)
        pi = pi_unramified(F, unimodular_triple())
        f = stationary_tail(F, 2, 6).times_abs_power(-1)
        with pytest.raises(TruncationUnsound):
            vh_transform(pi, f, out_hi=0)

    def test_open_high_edge_input_rejected(self):
        F = FieldModel(5)
        pi = pi_unramified(F, unimodular_triple())
        f = geometric_factor(F, pi.mus[0], pi.zs[0], 8)
        with pytest.raises(TruncationUnsound):
            vh_transform(pi, f)

    def test_dual_flag_matches_inverted_parameters(self):
        F = FieldModel(5)
        zs = unimodular_triple()
        pi = pi_unramified(F, zs)
        pi_inv = pi_unramified(F, tuple(1 / z for z in zs))
        f = quad_plain_shell(F, 1)
        g1 = vh_transform(pi, f, out_hi=4, dual=True)
        g2 = vh_transform(pi_inv, f, out_hi=4)
        assert max_rel_diff(g1, g2, range(-3, 5)) < TOL


class TestHyperKernel:
    def test_values_have_gauss_sum_scale(self):
        # each kernel value is tau0 q times a double sum of p-th roots
        # weighted by quadratic symbols; crude magnitude sanity plus
        # conjugation symmetry under negating the argument's unit
        F = FieldModel(5)
        K = hyper_kernel(F)
        assert set(K.shells()) == {-1}
        for u in F.unit_reps(1):
            val = K.value_vu(-1, u)
            assert abs(val) < abs(tau0(F)) * F.q * (F.p - 1) ** 2 + TOL
