"""Hankel-type transform on shell functions and its closed-form images.

The transform is defined against the gamma data of the ambient degree-three
representation: for every twist chi and every s,

    int VH(f)(t) chi^{-1}(t) |t|^{-s} d^x t
        = gamma(s, Pi x chi, psi) int f(y) chi(y) |y|^s d^x y.

On shell functions this diagonalizes over unit characters. Writing
a_n(xi) for the shell Mellin coefficients of the input and Y for the shell
variable, the output coefficients are read off the annulus expansion of
gamma_Y(xi) times the input series: the coefficient of Y^v is the
xi^{-1}-component of the output on the shell of valuation v. The expansion
has finitely many negative powers, so the large-argument side of the output
is always complete; toward small arguments the series is infinite unless
every contributing twist has a monomial gamma factor, and the output is
then truncated with its upper edge marked uncertified.

The second half of the module provides independent closed forms for the
transform images of the oscillatory families, both in the stable range and
below it, which the test suites compare against the pipeline.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .residue import (
    FieldModel,
    MultChar,
    enumerate_unit_chars,
    eps_half,
    eta0_char,
    gauss_unit_sum,
    legendre,
    psi_vu,
    tau0,
    trivial_char,
    turn,
)
from .schwartz import ShellFunction, TruncationUnsound, convolve
from .symbolics import (
    LaurentPoly,
    PiData,
    RationalLaurent,
    gamma_is_monomial,
    gamma_pi_Y,
)


def transform_components(
    pi: PiData, f: ShellFunction, dual: bool = False
) -> dict[int, tuple[MultChar, LaurentPoly, RationalLaurent]]:
    """Per-unit-character data of the transform input.

    Returns, keyed by character exponent at the working level: the unit
    character, the input coefficient polynomial A_xi(Y), and the multiplier
    gamma_Y(xi). The dual flag swaps in the contragredient triple.

    Coefficients smaller than 1e-12 times the largest one are treated as
    exact zeros: they are roundoff residue of character sums that cancel,
    and keeping them would drag spurious components into the image.
    """
    F = pi.F
    level = max(f.level, 1)
    fr = f.refine(level)
    rep = pi.dual() if dual else pi
    raw: list[tuple[MultChar, dict[int, complex]]] = []
    big = 0.0
    for xi in enumerate_unit_chars(F, level):
        coeffs: dict[int, complex] = {}
        for v in fr.shells():
            a = fr.mellin_shell(-v, xi)
            if a != 0:
                coeffs[-v] = a
                big = max(big, abs(a))
        if coeffs:
            raw.append((xi, coeffs))
    cut = big * 1e-12
    out: dict[int, tuple[MultChar, LaurentPoly, RationalLaurent]] = {}
    for xi, coeffs in raw:
        kept = {n: a for n, a in coeffs.items() if abs(a) > cut}
        if kept:
            out[xi.expo] = (xi, LaurentPoly(kept), gamma_pi_Y(rep, xi))
    return out


def vh_transform(
    pi: PiData,
    f: ShellFunction,
    out_hi: int | None = None,
    dual: bool = False,
    window_pad: int = 12,
) -> ShellFunction:
    """Apply the transform to a shell function.

    When every contributing twist has a monomial multiplier the image is
    exact on both sides. Otherwise the image extends toward small arguments
    indefinitely and is truncated at ``out_hi`` (default: a window of
    max(window_pad, twice the input span) past the lowest output shell)
    with the upper edge marked uncertified.

    The input must be exactly supported on its window (both edges
    certified). A truncated input would contaminate an unknowable set of
    output shells, so that case raises instead of guessing.
    """
    F = pi.F
    if not (f.exact_lo and f.exact_hi):
        raise TruncationUnsound(
            "transform input must be exactly supported; sum the closed "
            "forms shell by shell instead of truncating"
        )
    level = max(f.level, 1)
    comps = transform_components(pi, f, dual=dual)
    if not comps:
        return ShellFunction(F, level, {}, f.exact_lo, f.exact_hi)

    all_monomial = all(gamma_is_monomial(g) for _, _, g in comps.values())
    v_lo = min(
        (g.num.support[0] + a.support[0]) for _, a, g in comps.values()
    )
    if all_monomial:
        v_hi_exact = max(
            (g.num.support[1] + a.support[1]) for _, a, g in comps.values()
        )
        v_hi = v_hi_exact if out_hi is None else min(out_hi, v_hi_exact)
        exact_hi = out_hi is None or out_hi >= v_hi_exact
    else:
        if out_hi is None:
            w = f.window
            span = (w[1] - w[0] + 1) if w else 1
            v_hi = v_lo + max(window_pad, 2 * span)
        else:
            v_hi = out_hi
        exact_hi = False

    out = ShellFunction(F, level, {}, True, exact_hi)
    for _, (xi, a_poly, g) in sorted(comps.items()):
        series = (g.times_poly(a_poly)).series_coefficients(v_hi)
        for v, coef in series.coeffs.items():
            if v < v_lo or v > v_hi or coef == 0:
                continue
            for u in F.unit_reps(level):
                key = (v, u)
                out.data[key] = out.data.get(key, 0j) + coef * xi.eval_unit(u)
    out.data = {k: val for k, val in out.data.items() if abs(val) > 0}
    return out


def tail_mass_bound(
    pi: PiData, f: ShellFunction, v_hi: int, dual: bool = False
) -> float:
    """Bound on the d^x-mass of the image beyond the computed window.

    Each non-monomial multiplier contributes pole terms with |b_j| at most
    max|z_i|/q; coefficient k of the image component is bounded by the
    partial-fraction envelope. This sums those envelopes over shells past
    v_hi, assuming all |z_i| <= 1 so the per-shell ratio is at most 1/q.
    """
    comps = transform_components(pi, f, dual=dual)
    total = 0.0
    for _, (xi, a_poly, g) in comps.items():
        if gamma_is_monomial(g):
            continue
        r = max((abs(b) for b, _ in g.den), default=0.0)
        if r == 0:
            continue
        if r >= 1:
            raise ValueError("pole data outside the tempered range")
        # |num * A| coefficients sum, times the multiplicity-weighted
        # geometric envelope starting at v_hi + 1
        num = g.num * a_poly
        csum = sum(abs(c) for c in num.coeffs.values())
        m_tot = sum(m for _, m in g.den)
        lead = num.support[0] if num.support else 0
        k0 = max(v_hi + 1 - lead, 0)
        # binomial(k + m - 1, m - 1) <= (k + 1)^{m-1}
        term = csum * sum(
            (k + k0 + 1) ** (m_tot - 1) * r ** (k + k0) for k in range(200)
        )
        # analytic remainder past the summed range
        rem = (
            csum
            * (201 + k0) ** (m_tot - 1)
            * r ** (200 + k0)
            * 1.1
            / (1 - r)
        )
        total += term + rem
    return total


# ----------------------------------------------------------------------
# closed-form images: stable range
# ----------------------------------------------------------------------


def stationary_image(F: FieldModel, m: int) -> ShellFunction:
    """psi(t) on the shell v(t) = -m: the stable image of the level-m
    stationary family under the transform after division by |y|."""
    sf = ShellFunction(F, max(m, 1))
    for u in F.unit_reps(max(m, 1)):
        sf.set(-m, u, psi_vu(F, -m, u))
    return sf


def stationary_tail_image(F: FieldModel, m: int, depth: int) -> ShellFunction:
    """psi(t) on all shells v(t) <= -m, truncated at -depth.

    The small-argument side is exactly empty; the large-argument side is a
    truncation of an infinite support and is marked open.
    """
    sf = ShellFunction(F, depth, {}, False, True)
    for j in range(m, depth + 1):
        for u in F.unit_reps(depth):
            sf.set(-j, u, psi_vu(F, -j, u))
    return sf


def quad_plain_image(F: FieldModel, n: int) -> ShellFunction:
    """Stable closed form of the transform of the plain quadratic family.

    Supported on v(t) = -n; even n gives q^{3n/2} psi(4t), odd n gives
    tau0 q^{ceil(3n/2)} psi(4t) eta0(4t).
    """
    if n < 2:
        raise ValueError("stable closed form needs level >= 2")
    lvl = n
    sf = ShellFunction(F, lvl)
    t0 = tau0(F)
    for u in F.unit_reps(lvl):
        ps = psi_vu(F, -n, 4 * u)
        if n % 2 == 0:
            sf.set(-n, u, F.q ** (3 * n // 2) * ps)
        else:
            sf.set(
                -n, u,
                t0 * F.q ** math.ceil(3 * n / 2) * ps * legendre(4 * u, F.p),
            )
    return sf


def quad_twisted_image(F: FieldModel, n: int) -> ShellFunction:
    """Stable closed form for the twisted family: the same shape with the
    quadratic symbol moved to the even case and a global sign
    eta0(-1)^n eta0(-2)."""
    if n < 2:
        raise ValueError("stable closed form needs level >= 2")
    lvl = n
    sf = ShellFunction(F, lvl)
    t0 = tau0(F)
    sign = legendre(-1, F.p) ** n * legendre(-2, F.p)
    for u in F.unit_reps(lvl):
        ps = psi_vu(F, -n, 4 * u)
        if n % 2 == 0:
            sf.set(-n, u, sign * F.q ** (3 * n // 2) * ps * legendre(4 * u, F.p))
        else:
            sf.set(-n, u, sign * t0 * F.q ** math.ceil(3 * n / 2) * ps)
    return sf


# ----------------------------------------------------------------------
# closed-form images: below the stable range (unramified-type pieces)
# ----------------------------------------------------------------------


def geometric_factor(
    F: FieldModel, mu: MultChar, z: complex, depth: int
) -> ShellFunction:
    """The difference kernel (1 - z T_pi) applied to mu^{-1}(y)|y| 1_O(y).

    Values: -z mu^{-1}(u) on the shell v = -1, then
    z^{-v} q^{-v} (1 - 1/q) mu^{-1}(u) for 0 <= v <= depth, open above.
    """
    lvl = max(mu.conductor, 1) if mu.expo else 0
    sf = ShellFunction(F, lvl, {}, True, False)
    inv = mu.inverse()
    for u in F.unit_reps(lvl):
        val = inv.eval_unit(u)
        sf.set(-1, u, -z * val)
        for v in range(depth + 1):
            sf.set(v, u, z ** (-v) * F.q ** (-v) * (1 - 1 / F.q) * val)
    return sf


def triple_convolution(
    pi: PiData, out_shells: list[int], depth_pad: int = 4
) -> ShellFunction:
    """(f1 * f2 * f3) on the requested shells, for the triple's factors."""
    hi = max(out_shells)
    depth = hi + depth_pad
    f1 = geometric_factor(pi.F, pi.mus[0], pi.zs[0], depth + 2)
    f2 = geometric_factor(pi.F, pi.mus[1], pi.zs[1], depth + 2)
    f3 = geometric_factor(pi.F, pi.mus[2], pi.zs[2], depth)
    lo = min(out_shells)
    mid = convolve(f1, f2, range(lo - 1, hi + 2))
    return convolve(mid, f3, out_shells)


def hyper_kernel(F: FieldModel) -> ShellFunction:
    """The residual kernel on the shell v(y) = -1 of the below-stable plain
    image at level one: a normalized double character sum over the shell
    (pi^{-1} O^x)^2 of psi(t1 + t2 - t1 t2 / (4y)) eta0(4y / (t1 t2))."""
    p = F.p
    t0 = tau0(F)
    sf = ShellFunction(F, 1)
    for uy in range(1, p):
        inv4y = pow(4 * uy, -1, p)
        acc = 0j
        for u1 in range(1, p):
            for u2 in range(1, p):
                phase = (u1 + u2 - u1 * u2 * inv4y) % p
                acc += turn(Fraction(phase, p)) * legendre(
                    4 * uy * u1 * u2, p
                )
        sf.set(-1, uy, t0 * F.q * acc)
    return sf


def quad_plain_image_unstable(
    pi: PiData, n: int, out_shells: list[int]
) -> ShellFunction:
    """Below-stable closed form for the plain quadratic family, levels 0..1.

    Level 0: the triple convolution plus tau0 q^2 eta0(-y) on v(y) = -3.
    Level 1: the rescaled triple convolution with a sign, minus zeta(1) on
    the shell v(y) = -1, plus the residual kernel there.
    """
    F = pi.F
    t0 = tau0(F)
    zeta1 = F.zeta1
    if n == 0:
        conv = triple_convolution(pi, out_shells)
        extra = ShellFunction(F, 1)
        if -3 in out_shells:
            for u in F.unit_reps(1):
                extra.set(-3, u, t0 * F.q**2 * legendre(-u, F.p))
        out = conv + extra
        out.exact_hi = False
        return out
    if n == 1:
        shifted = [v - 2 for v in out_shells]
        conv = (
            triple_convolution(pi, shifted).translate(-2, 1).scale(-zeta1 / F.q)
        )
        rest = ShellFunction(F, 1)
        if -1 in out_shells:
            for u in F.unit_reps(1):
                rest.set(-1, u, -zeta1)
        out = conv + rest + hyper_kernel(F)
        out.exact_hi = False
        return out
    raise ValueError("below-stable forms cover levels 0 and 1 only")


def quad_twisted_image_unstable(
    pi: PiData, n: int, out_shells: list[int]
) -> ShellFunction:
    """Below-stable closed form for the twisted family, levels 0..1.

    Level 0 vanishes unless q = 1 mod 4, in which case it is a pair of
    cubed central epsilon factors of the two quartic characters on the
    shell v(y) = -3. Level 1 combines the rescaled triple convolution,
    weighted by the abelian gamma value of the quadratic extension
    character, with a triple character sum and a constant on v(y) = -1.
    """
    F = pi.F
    p = F.p
    t0 = tau0(F)
    zeta1 = F.zeta1
    eta_m1 = legendre(-1, p)
    if n == 0:
        sf = ShellFunction(F, 1)
        if (p - 1) % 4 != 0:
            return sf
        if -3 not in out_shells:
            return sf
        cap = p - 1
        quartic = MultChar(F, 1, cap // 4, at_pi=1.0 + 0j)
        e1 = eps_half(F, quartic)
        e2 = eps_half(F, quartic.inverse())
        for u in F.unit_reps(1):
            val = F.q**1.5 * (
                e1**3 * quartic.eval_unit(u)
                + e2**3 * quartic.inverse().eval_unit(u)
            )
            sf.set(-3, u, val)
        return sf
    if n == 1:
        # abelian gamma of the extension character at s = 1, via the
        # normalized Gauss sum: monomial eps q^{1/2} X^{-1} at X = q,
        # with the uniformizer value eta0(-1) folded in
        eta_full = eta0_char(F).with_at_pi(complex(eta_m1))
        gamma1 = eps_half(F, eta_full) * F.q ** (-0.5)
        shifted = [v - 2 for v in out_shells]
        conv = (
            triple_convolution(pi, shifted)
            .translate(-2, 1)
            .scale(zeta1 * gamma1)
        )
        rest = ShellFunction(F, 1)
        if -1 in out_shells:
            for uy in range(1, p):
                acc = 0j
                for u1 in range(1, p):
                    for u2 in range(1, p):
                        inv12 = pow(u1 * u2, -1, p)
                        for u3 in range(1, p):
                            phase = (
                                u1 + u2 + u3 + u3 * u3 * uy * inv12
                            ) % p
                            acc += legendre(u3, p) * turn(Fraction(phase, p))
                rest.set(-1, uy, eta_m1 * (acc + zeta1 * t0))
        out = conv + rest
        out.exact_hi = False
        return out
    raise ValueError("below-stable forms cover levels 0 and 1 only")
