"""Torus orbital test functions attached to a quadratic-algebra character.

The central object is a function H on F^x built from a character beta of
the unit group of a quadratic etale algebra L over F whose restriction to
F^x is the class character of L/F. On the square class x = tau y^2 the
value of H is a norm-one torus integral,

    H(tau y^2) = lam(L) |tau|^(1/2) |y| eta(y)
                 * integral over the integral torus of
                   beta(x_tau a) psi(Tr(x_tau a) y) da,

where x_tau is any point of L^x with norm tau (for the split algebra the
trace of x_tau is additionally pinned to 1 + tau so that the defining
integral converges shell by shell), eta is the class character of L/F and
lam(L) the normalized Weil constant. The function vanishes off the norm
classes of L^x and is independent of the choice of x_tau.

Deep into the large-argument range H stabilizes to the stationary-phase
family from :mod:`lwl.schwartz`, so a finite window of computed shells
plus a closed tail describes the whole function. The window is stored as
a :class:`ShellFunction` with both edges certified.

The module provides four operations on top of the construction itself:

* :func:`eps_n` evaluates the Mellin coefficients of H against a unit
  character, either by direct shell integration or through closed
  epsilon-factor formulas (both routes are kept and cross-checked);
* :func:`decompose_H` rewrites the window as a sum of translated members
  of the quadratic shell families, each piece a torus integral over a
  trace-restricted region;
* :func:`l2_weight_proxy` computes the squared d^x-norm of H both from
  the window plus tail and from a closed volume formula;
* :func:`shell_torus_integral` exposes the raw per-shell integrals for
  restriction experiments.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Mapping

import numpy as np
import sympy

from .residue import FieldModel, MultChar, eps_half, legendre, turn_int
from .quadext import (
    ExtChar,
    LPoint,
    QuadExt,
    RAMIFIED,
    SPLIT,
    UNRAMIFIED,
    _residue_gen_unram,
    enumerate_ext_chars,
    norm_class_char,
    norm_class_reps,
    point_with_norm,
    prec_for_depth,
    ramified_ext,
    split_ext,
    torus_coset_volume,
    torus_level,
    torus_volume,
    unramified_ext,
    weil_index,
)
from .schwartz import (
    ShellFunction,
    quad_plain_shell,
    quad_twisted_shell,
    stationary_shell,
    stationary_tail,
)

__all__ = [
    "OrbitalParam",
    "TestFunctionH",
    "HDecomposition",
    "L2Proxy",
    "orbital_param",
    "param_from_spec",
    "stability_floor",
    "shell_torus_integral",
    "build_H",
    "eps_n",
    "decompose_H",
    "l2_weight_proxy",
    "norm_composite_conductor",
    "pointwise_ext_conductor",
]


# ----------------------------------------------------------------------
# Parameters
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class OrbitalParam:
    """A quadratic algebra together with a ramified character of its units.

    ``x_points`` holds one point of L^x per norm class of F^x, with the
    norm of the k-th point lying in the k-th class of
    :func:`norm_class_reps`. Any section works; the build is checked to be
    independent of it.
    """

    ext: QuadExt
    beta: ExtChar
    x_points: tuple[LPoint, ...]

    @property
    def F(self) -> FieldModel:
        return self.ext.F

    @property
    def n0(self) -> int:
        return self.beta.conductor

    @property
    def regular(self) -> bool:
        return self.beta.is_regular


def orbital_param(ext: QuadExt, beta: ExtChar, alt_section: bool = False) -> OrbitalParam:
    """Package a unit character of L^x with a section of the norm map.

    ``alt_section`` multiplies every section point by a fixed norm-one
    point, giving a second, equally valid choice for invariance tests.
    """
    if beta.ext != ext:
        raise ValueError("character belongs to a different algebra")
    n0 = beta.conductor
    if n0 < 1:
        raise ValueError("the unit character must be ramified")
    if ext.kind == RAMIFIED and n0 % 2:
        raise ValueError("ramified-kind conductors are even")
    prec = prec_for_depth(ext, 4 * n0 + 8)
    xs = []
    for v, u in norm_class_reps(ext):
        x = point_with_norm(ext, v, u, prec)
        if alt_section:
            x = x * _norm_one_twirl(ext, prec)
        xs.append(x)
    return OrbitalParam(ext, beta, tuple(xs))


def _norm_one_twirl(ext: QuadExt, prec: int) -> LPoint:
    """A fixed nontrivial norm-one point, used for the alternate section."""
    if ext.kind == SPLIT:
        r = 2 % ext.F.p or 3
        return LPoint(ext, r, pow(r, -1, ext.F.p**prec), prec)
    x = ext.one(prec) + ext.gen_w(prec)
    return x.torus_part()


def stability_floor(ext: QuadExt, n0: int) -> int:
    """Smallest window depth n1 at which the construction may be cut.

    Beyond the shell index 2*floor the function agrees with the stationary
    family, so a window reaching that far plus the closed tail is exact.
    """
    return max(2 * n0 // ext.e + ext.e - 1, 2)


def param_from_spec(spec: Mapping) -> OrbitalParam:
    """Build a parameter set from a plain JSON-style mapping.

    Keys: ``p``, optional ``precision``, ``kind`` in
    {"split", "unramified", "ramified"}, ``n0``, and an optional ``beta``
    sub-mapping with ``index`` (position in the deterministic character
    enumeration at that conductor) and ``sign`` (ramified kind only).
    """
    F = FieldModel(int(spec["p"]), int(spec.get("precision", 24)))
    makers = {
        SPLIT: split_ext,
        UNRAMIFIED: unramified_ext,
        RAMIFIED: ramified_ext,
    }
    ext = makers[spec["kind"]](F)
    n0 = int(spec["n0"])
    bspec = spec.get("beta", {})
    sign = int(bspec.get("sign", 1))
    chars = enumerate_ext_chars(ext, n0, sign=sign)
    if not chars:
        raise ValueError("no characters at this conductor")
    beta = chars[int(bspec.get("index", 0)) % len(chars)]
    return orbital_param(ext, beta)


# ----------------------------------------------------------------------
# Torus walks and per-shell integrals
# ----------------------------------------------------------------------


@lru_cache(maxsize=None)
def _beta_walk(
    ext: QuadExt, beta: ExtChar, depth: int
) -> tuple[tuple[LPoint, ...], tuple[complex, ...]]:
    """Coset representatives of the integral torus at a depth, with the
    character evaluated once per representative."""
    reps = tuple(torus_level(ext, depth).reps())
    return reps, tuple(beta.eval(a) for a in reps)


def _walk_depth(param: OrbitalParam, m: int) -> int:
    """A torus depth whose cosets resolve both the character and the trace
    of x * a modulo p^m for every section point x."""
    return max(param.n0, param.ext.e * m, 1)


def shell_torus_integral(
    param: OrbitalParam,
    m: int,
    class_index: int,
    trace_filter: Callable[[int, int], bool] | None = None,
    depth: int | None = None,
) -> dict[int, complex]:
    """Torus integrals against psi(Tr(x a) y) on the shell v(y) = -m.

    Returns a map from the unit class of y mod p^m to the value of

        integral over the integral torus of beta(x a) psi(Tr(x a) y) da

    with x the section point of the given norm class. ``trace_filter``
    optionally restricts the domain: it receives the trace of x * a as a
    plain integer together with the working modulus and keeps the point
    when it returns True.
    """
    ext = param.ext
    p = ext.F.p
    if m < 1:
        raise ValueError("shell integrals start at v(y) = -1")
    if depth is None:
        depth = _walk_depth(param, m)
    reps, bvals = _beta_walk(ext, param.beta, depth)
    x = param.x_points[class_index]
    bx = param.beta.eval(x)
    covol = torus_coset_volume(ext, depth)
    M = p**m
    bins = np.zeros(M, dtype=complex)
    for a, bv in zip(reps, bvals):
        z = x * a
        if trace_filter is not None and not trace_filter(z.trace(), p**z.prec):
            continue
        bins[z.trace() % M] += bv
    vals = np.fft.ifft(bins) * (M * bx * covol)
    return {u: complex(vals[u]) for u in range(M) if u % p}


# ----------------------------------------------------------------------
# Building the test function
# ----------------------------------------------------------------------


@dataclass
class TestFunctionH:
    """The computed window of the orbital function plus tail access.

    ``Hc`` stores the shells with valuation in [-(2 n1 - 1), -1] exactly;
    outside that window the function is the stationary family on doubled
    shells (large arguments) and zero on v >= 0.
    """

    param: OrbitalParam
    n1: int
    Hc: ShellFunction

    @property
    def F(self) -> FieldModel:
        return self.param.F

    def shell(self, n: int) -> ShellFunction:
        """The restriction of H to the shell v = -n, exact for every n >= 1."""
        if n < 1:
            raise ValueError("H vanishes on v >= 0; ask for n >= 1")
        if n <= 2 * self.n1 - 1:
            return self.Hc.restrict_v(-n, -n)
        if n % 2 == 0:
            return stationary_shell(self.F, n // 2)
        return ShellFunction(self.F, 1, {}, True, True)

    def tail(self, depth: int) -> ShellFunction:
        """The stationary tail, truncated at the given family level."""
        return stationary_tail(self.F, self.n1, depth)

    def full(self, depth: int | None = None) -> ShellFunction:
        """Window plus truncated tail; the low edge is uncertified."""
        if depth is None:
            depth = self.n1
        return self.Hc + self.tail(depth)


def build_H(param: OrbitalParam, n1: int | None = None) -> TestFunctionH:
    """Compute the orbital function on the window v in [-(2 n1 - 1), -1].

    The default window depth is the stability floor; larger values are
    allowed and simply compute more shells that already agree with the
    stationary family. For a non-regular character the shallow shells are
    cut to zero, which is the standard normalization making the
    small-argument vanishing exact.
    """
    ext = param.ext
    F = ext.F
    p, q, e, n0 = F.p, F.q, ext.e, param.n0
    floor = stability_floor(ext, n0)
    if n1 is None:
        n1 = floor
    if n1 < floor:
        raise ValueError(f"window depth {n1} is below the stability floor {floor}")
    top = 2 * n1 - 1
    lam = weil_index(ext)
    eta = norm_class_char(ext)
    pieces: list[ShellFunction] = []
    for ci, (tv, tu) in enumerate(norm_class_reps(ext)):
        m_hi = n1 if tv else n1 - 1
        depth = _walk_depth(param, m_hi)
        for m in range(1, m_hi + 1):
            n = 2 * m - tv
            if n < 1 or n > top:
                continue
            if not param.regular and -m >= Fraction(2 - n0, e) - 1:
                continue
            ivals = shell_torus_integral(param, m, ci, depth=depth)
            mod = p**m
            scale = q**m * torus_volume(ext)
            assembled: dict[int, complex] = {}
            for u_y, ival in ivals.items():
                hval = lam * q ** (-tv / 2) * q**m * eta.eval_vu(-m, u_y) * ival
                u_x = tu * u_y * u_y % mod
                if u_x in assembled:
                    if abs(assembled[u_x] - hval) > 1e-7 * max(1.0, scale):
                        raise AssertionError(
                            "the two square roots of a shell point disagree"
                        )
                else:
                    assembled[u_x] = hval
            fn = ShellFunction(F, max(m, 1), {}, True, True)
            for u_x, hval in assembled.items():
                if abs(hval) > 1e-11 * scale:
                    fn.set(-n, u_x, hval)
            pieces.append(fn)
    Hc = ShellFunction(F, 1, {}, True, True)
    for fn in pieces:
        Hc = Hc + fn
    return TestFunctionH(param, int(n1), Hc)


# ----------------------------------------------------------------------
# Mellin coefficients: brute and closed routes
# ----------------------------------------------------------------------


def eps_n(chi: MultChar, H: TestFunctionH, n: int, route: str = "closed") -> complex:
    """The n-th Mellin coefficient of H against a character of F^x.

    This is the d^x-integral of H * chi over the shell v = -n, normalized
    by chi at the uniformizer so that only the unit part of chi and its
    value at pi enter separately. The brute route integrates the stored
    shell; the closed route evaluates the epsilon-factor formulas, which
    vanish off a single shell determined by conductors.
    """
    if n < 1:
        raise ValueError("coefficients are indexed by n >= 1")
    if chi.at_pi is None:
        raise ValueError("the character needs a value at the uniformizer")
    if route == "brute":
        f = H.shell(n)
        f = f.refine(max(f.level, chi.conductor, 1))
        return f.d_mult_integral(unit_char=chi, v_range=(-n, -n)) * chi.at_pi ** (-n)
    if route != "closed":
        raise ValueError("route must be 'brute' or 'closed'")
    param = H.param
    if param.ext.kind == SPLIT:
        return _eps_n_closed_split(param, chi, n)
    return _eps_n_closed_nonsplit(param, chi, n)


def _eps_n_closed_split(param: OrbitalParam, chi: MultChar, n: int) -> complex:
    """Closed coefficients for the split algebra.

    With beta = (chi0, chi0^{-1}), splitting the shell into square cosets
    factors the coefficient into two abelian Gauss integrals at depth n/2,
    one for each twist chi chi0^{+-1}. A ramified twist of conductor n/2
    contributes q^{-n/4} times an epsilon factor; an unramified twist is
    supported at depth 1 only and contributes -q^{-1} times the inverse
    value at the uniformizer.
    """
    F = param.F
    q = F.q
    chi0 = param.beta.chi0
    if chi0.at_pi is None:
        chi0 = chi0.with_at_pi(1)
    z1 = F.zeta1
    plus = chi0 * chi
    minus = chi0.inverse() * chi
    cp = plus.conductor
    cm = minus.conductor
    if cp >= 1 and cm >= 1:
        if n % 2 or cp != n // 2 or cm != n // 2:
            return 0j
        return (
            z1
            * eps_half(F, chi0 * chi.inverse())
            * eps_half(F, chi0.inverse() * chi.inverse())
        )
    if cp == 0 and cm >= 1:
        if not (n == 2 and cm == 1):
            return 0j
        return -z1 * q**-0.5 / plus.at_pi * eps_half(F, chi0 * chi.inverse())
    if cm == 0 and cp >= 1:
        if not (n == 2 and cp == 1):
            return 0j
        return -z1 * q**-0.5 / minus.at_pi * eps_half(F, chi0.inverse() * chi.inverse())
    if n != 2:
        return 0j
    return z1 / q / (plus.at_pi * minus.at_pi)


def _composite_char(param: OrbitalParam, chi: MultChar) -> Callable[[LPoint], complex]:
    """The pointwise product beta(x) chi(Nr x) on units of L."""
    beta = param.beta

    def B(x: LPoint) -> complex:
        return beta.eval(x) * chi.eval_unit(x.norm())

    return B


def pointwise_ext_conductor(
    ext: QuadExt, fn: Callable[[LPoint], complex], cap: int, prec: int
) -> int:
    """Conductor exponent of a multiplicative function on units of L.

    Measured by descending from ``cap``: the exponent drops past a layer
    exactly when the function is trivial on that layer's generators, which
    is a valid test because triviality above has already been established.
    """
    c = cap
    while c >= 1 and _trivial_on_ext_layer(ext, fn, c - 1, prec):
        c -= 1
    return c


def _trivial_on_ext_layer(
    ext: QuadExt, fn: Callable[[LPoint], complex], m: int, prec: int
) -> bool:
    p = ext.F.p
    if m == 0:
        if ext.kind == UNRAMIFIED:
            a, b = _residue_gen_unram(p)
            gens = [LPoint(ext, a, b, prec)]
        else:
            g = int(sympy.ntheory.primitive_root(p))
            gens = [ext.embed_unit(g, prec)]
        return all(abs(fn(g) - 1) < 1e-8 for g in gens)
    one = ext.one(prec)
    if ext.kind == RAMIFIED:
        if m % 2 == 0:
            raw = [LPoint(ext, p ** (m // 2), 0, prec)]
        else:
            raw = [LPoint(ext, 0, p ** (m // 2), prec)]
    else:
        raw = [LPoint(ext, p**m, 0, prec), LPoint(ext, 0, p**m, prec)]
    return all(abs(fn(one + g) - 1) < 1e-8 for g in raw)


def norm_composite_conductor(ext: QuadExt, chi: MultChar) -> int:
    """Conductor exponent of chi composed with the norm, computed pointwise."""
    cap = chi.conductor if ext.e == 1 else max(2 * chi.conductor - 1, 0)
    cap = max(cap, 1)
    prec = prec_for_depth(ext, cap + 2) + 1

    def fn(x: LPoint) -> complex:
        return chi.eval_unit(x.norm())

    return pointwise_ext_conductor(ext, fn, cap, prec)


def _ext_unit_reps(ext: QuadExt, c: int, prec: int) -> list[LPoint]:
    """Representatives of the units of O_L modulo 1 + P_L^c."""
    p = ext.F.p
    if ext.e == 1:
        mod = p**c
        return [
            LPoint(ext, a, b, prec)
            for a in range(mod)
            for b in range(mod)
            if a % p or b % p
        ]
    ka = (c + 1) // 2
    kb = c // 2
    return [
        LPoint(ext, a, b, prec)
        for a in range(p**ka)
        if a % p
        for b in range(max(p**kb, 1))
    ]


def _psi_ext_over_gamma(ext: QuadExt, u: LPoint, c: int) -> complex:
    """The additive character of L at u / gamma, where gamma generates the
    inverse different times P_L^c (the natural denominator at exponent c)."""
    p = ext.F.p
    if ext.e == 1:
        mod = p**c
        return turn_int(u.trace() % mod, mod)
    k = c + 1
    mstar = (k + 1) // 2
    if k % 2:
        z = u * ext.gen_w(u.prec)
    else:
        z = u
    mod = p**mstar
    base = (-ext.twist) % mod
    inv = pow(base, -1, mod) ** mstar % mod
    return turn_int(2 * z.a * inv % mod, mod)


def _eps_n_closed_nonsplit(param: OrbitalParam, chi: MultChar, n: int) -> complex:
    """Closed coefficients for a field extension.

    The coefficient is supported on the single n where the conductor of
    the composite character beta * (chi o Nr) matches e n / 2 + 1 - e, and
    there equals zeta(1) lam(L) times the half-line epsilon factor of the
    inverse composite over L.
    """
    ext = param.ext
    F = ext.F
    e = ext.e
    if (e * n) % 2:
        return 0j
    target = (e * n) // 2 + 1 - e
    if target < 0:
        return 0j
    cap = max(param.n0, chi.conductor if e == 1 else max(2 * chi.conductor - 1, 0), 1)
    prec = prec_for_depth(ext, cap + 3) + 1
    B = _composite_char(param, chi)
    c = pointwise_ext_conductor(ext, B, cap + 1, prec)
    if c != target:
        return 0j
    return complex(F.zeta1) * weil_index(ext) * _ext_eps_inverse(param, chi, c)


def _ext_eps_inverse(param: OrbitalParam, chi: MultChar, c: int) -> complex:
    """Half-line epsilon factor over L of the inverse composite character.

    Normalized like the base-field one: qL^{-c/2} times the Gauss sum of
    the composite against the additive character at denominator exponent
    c plus the additive conductor of L, divided by the composite at that
    denominator.
    """
    ext = param.ext
    beta = param.beta
    qL = ext.qL
    b_gamma = _composite_at_gamma(param, chi, c)
    if c == 0:
        if ext.e == 1:
            return 1.0 + 0j
        return 1 / b_gamma
    prec = prec_for_depth(ext, 2 * c + 3) + 1
    B = _composite_char(param, chi)
    acc = 0j
    for u in _ext_unit_reps(ext, c, prec):
        acc += B(u) * _psi_ext_over_gamma(ext, u, c)
    count = qL**c
    return acc / b_gamma * count ** (-1) * qL ** (c / 2)


def _composite_at_gamma(param: OrbitalParam, chi: MultChar, c: int) -> complex:
    """Value of beta * (chi o Nr) at the Gauss-sum denominator gamma."""
    ext = param.ext
    beta = param.beta
    if ext.e == 1:
        base = beta.at_unif * chi.at_pi**2
        return base**c
    t = ext.twist
    base = beta.at_unif * chi.at_pi * chi.eval_unit(t)
    return base ** (c + 1)


# ----------------------------------------------------------------------
# Shell-by-shell decomposition into quadratic families
# ----------------------------------------------------------------------


@dataclass
class HDecomposition:
    """The window rewritten as one shell function per shell index.

    ``pieces`` maps the shell index n (support at v = -n) to its
    assembled function; ``terms`` keeps the individually labelled
    boundary-shell summands for inspection.
    """

    pieces: dict[int, ShellFunction]
    terms: dict[str, ShellFunction] = field(default_factory=dict)

    def total(self) -> ShellFunction:
        out: ShellFunction | None = None
        for nn in sorted(self.pieces):
            fn = self.pieces[nn]
            out = fn if out is None else out + fn
        if out is None:
            raise ValueError("empty decomposition")
        return out


def decompose_H(H: TestFunctionH) -> HDecomposition:
    """Rewrite the window as translated quadratic-family integrals.

    Each shell of the window is expressed through members of the plain
    (field and split kinds) or twisted (ramified kind) quadratic family,
    translated by trace data and weighted by torus integrals over
    trace-restricted regions. Summing the pieces reproduces the window
    exactly; the tests check this pointwise.
    """
    if H.param.ext.e == 1:
        return _decompose_unramified_or_split(H)
    return _decompose_ramified(H)


def _decompose_unramified_or_split(H: TestFunctionH) -> HDecomposition:
    param = H.param
    ext = param.ext
    F = ext.F
    p, q = F.p, F.q
    n0, n1 = param.n0, H.n1
    eta = norm_class_char(ext)
    eps_l = int(round(eta.eval_vu(1, 1).real))
    depth = max(n0, 2 * n0 - 1, 1)
    reps, bvals = _beta_walk(ext, param.beta, depth)
    covol = torus_coset_volume(ext, depth)
    prec = reps[0].prec
    modf = p**prec
    inv2 = pow(2, -1, modf)
    pieces: dict[int, ShellFunction] = {}
    terms: dict[str, ShellFunction] = {}

    for n in range(2 * n0, n1):
        pieces[2 * n] = stationary_shell(F, n)

    for n in range(n0 + 1, 2 * n0):
        k = 2 * (n0 - 1) if n == 2 * n0 - 1 else 2 * (n - n0)
        lvl = max(n, 1)
        modn = p**lvl
        weights: dict[int, complex] = defaultdict(complex)
        for a, bv in zip(reps, bvals):
            t = a.trace()
            d = (t * inv2 - 1) % modf
            if d % p**k:
                continue
            if n < 2 * n0 - 1 and (d // p**k) % p == 0:
                continue
            weights[t * t % modn] += bv
        base = quad_plain_shell(F, n)
        fn = ShellFunction(F, lvl, {}, True, True)
        for du, w in weights.items():
            fn = fn + base.translate(0, du).scale(w * covol * (eps_l * q) ** n)
        pieces[2 * n] = fn

    half = (eps_l * q) ** n0 / 2
    boundary = ShellFunction(F, 1, {}, True, True)

    star = 0 if legendre(-1, p) == eps_l else 1
    tv_s, tu_s = norm_class_reps(ext)[star]
    x_star = param.x_points[star]
    bx_star = param.beta.eval(x_star)
    for m in range(0, n0):
        if m == 0:
            wsum = 0j
            for a, bv in zip(reps, bvals):
                if (x_star * a).trace() % p**n0 == 0:
                    wsum += bv
            piece = (
                quad_plain_shell(F, 0)
                .translate(2 * n0, pow(tu_s, -1, p))
                .scale(bx_star * wsum * covol * half)
            )
        else:
            lvl = max(m, 1)
            modm = p**lvl
            tau_inv = pow(tu_s, -1, modm)
            weights = defaultdict(complex)
            for a, bv in zip(reps, bvals):
                t = (x_star * a).trace()
                if t % p ** (n0 - m):
                    continue
                tt = t // p ** (n0 - m)
                if tt % p == 0:
                    continue
                weights[tau_inv * tt * tt % modm] += bv
            base = quad_plain_shell(F, m)
            piece = ShellFunction(F, lvl, {}, True, True)
            for du, w in weights.items():
                piece = piece + base.translate(2 * (n0 - m), du).scale(
                    bx_star * w * covol * half
                )
        terms[f"top_m{m}"] = piece
        boundary = boundary + piece

    x_eps = param.x_points[1]
    bx_eps = param.beta.eval(x_eps)
    lvl = max(n0, 1)
    modm = p**lvl
    eps_inv = pow(F.nonresidue, -1, modm)
    weights = defaultdict(complex)
    for a, bv in zip(reps, bvals):
        t = (x_eps * a).trace()
        if t % p == 0:
            continue
        weights[eps_inv * t * t % modm] += bv
    base = quad_plain_shell(F, n0)
    piece = ShellFunction(F, lvl, {}, True, True)
    for du, w in weights.items():
        piece = piece + base.translate(0, du).scale(bx_eps * w * covol * half)
    terms["edge_nonsquare"] = piece
    boundary = boundary + piece

    inv4 = pow(4, -1, modf)
    weights = defaultdict(complex)
    for a, bv in zip(reps, bvals):
        t = a.trace()
        if t % p == 0:
            continue
        if n0 >= 2 and (t * t * inv4 - 1) % modf % p == 0:
            continue
        weights[t * t % modm] += bv
    piece = ShellFunction(F, lvl, {}, True, True)
    for du, w in weights.items():
        piece = piece + base.translate(0, du).scale(w * covol * half)
    terms["edge_square"] = piece
    boundary = boundary + piece

    pieces[2 * n0] = boundary
    return HDecomposition(pieces, terms)


def _decompose_ramified(H: TestFunctionH) -> HDecomposition:
    param = H.param
    ext = param.ext
    F = ext.F
    p, q = F.p, F.q
    n0, n1 = param.n0, H.n1
    eta = norm_class_char(ext)
    lam = weil_index(ext)
    lam_l = lam * legendre(2, p)
    depth = max(n0, 2 * n0 - 1, n0 + 1)
    reps, bvals = _beta_walk(ext, param.beta, depth)
    covol = torus_coset_volume(ext, depth)
    prec = reps[0].prec
    modf = p**prec
    inv2 = pow(2, -1, modf)
    pieces: dict[int, ShellFunction] = {}
    terms: dict[str, ShellFunction] = {}

    for n in range(n0 + 1, n1):
        pieces[2 * n] = stationary_shell(F, n)

    for n in range(n0 // 2 + 1, n0 + 1):
        k = n0 - 1 if n == n0 else 2 * n - n0 - 1
        lvl = max(n, 1)
        modn = p**lvl
        weights: dict[int, complex] = defaultdict(complex)
        for a, bv in zip(reps, bvals):
            t = a.trace()
            d = (t * inv2 - 1) % modf
            if d % p**k:
                continue
            if n < n0 and (d // p**k) % p == 0:
                continue
            weights[t * t % modn] += bv
        base = quad_twisted_shell(F, n)
        fn = ShellFunction(F, lvl, {}, True, True)
        for du, w in weights.items():
            fn = fn + base.translate(0, du).scale(w * covol * lam_l * q**n)
        pieces[2 * n] = fn

    t_unit = ext.twist
    scale = lam / 2 * q ** ((n0 + 1) / 2)
    w_pt = ext.gen_w(prec)
    b_w = param.beta.eval(w_pt)
    acc = ShellFunction(F, 1, {}, True, True)
    for m in range(0, n0 // 2 + 1):
        if m == 0:
            wsum = 0j
            for a, bv in zip(reps, bvals):
                if (w_pt * a).trace() % p ** (n0 // 2 + 1) == 0:
                    wsum += bv
            piece = (
                quad_twisted_shell(F, 0)
                .translate(n0 + 1, pow(t_unit, n0 + 1, p))
                .scale(b_w * wsum * covol * scale)
            )
        else:
            lvl = max(m, 1)
            modm = p**lvl
            t_inv = pow(t_unit, -1, modm)
            kk = n0 // 2 + 1 - m
            weights = defaultdict(complex)
            for a, bv in zip(reps, bvals):
                tt = (w_pt * a).trace()
                if tt % p**kk:
                    continue
                tu = tt // p**kk
                if tu % p == 0:
                    continue
                eta_t = eta.eval_vu(kk, tu % modf)
                weights[tu * tu * t_inv % modm] += bv * eta_t
            base = quad_twisted_shell(F, m)
            piece = ShellFunction(F, lvl, {}, True, True)
            for du, w in weights.items():
                piece = piece + base.translate(n0 + 1 - 2 * m, du).scale(
                    b_w * w * covol * scale
                )
        terms[f"odd_m{m}"] = piece
        acc = acc + piece
    pieces[n0 + 1] = acc
    return HDecomposition(pieces, terms)


# ----------------------------------------------------------------------
# Squared norm proxy
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class L2Proxy:
    """Squared d^x-norm of H: window-plus-tail value, closed value, and
    the conductor lower bound the closed value must dominate."""

    brute: float
    closed: float
    lower_bound: float


def l2_weight_proxy(H: TestFunctionH) -> L2Proxy:
    """Both routes to the squared d^x-norm of H.

    The brute route sums |H|^2 |x|^{-1} over the stored window cosets and
    adds the exact stationary tail (each stationary level m contributes
    q^{-m}). The closed route unfolds the square through the torus: it is
    zeta(1) over the zeta value of L at 1, times the L-disc volume
    normalizer, times the summed measures of the torus filtration from
    the character's torus conductor on. The two routes agree for a
    regular character; a non-regular one is cut at shallow shells, which
    the volume formula does not see.
    """
    param = H.param
    ext = param.ext
    F = ext.F
    q = F.q
    e = ext.e
    covol = F.coset_volume(H.Hc.level)
    window = sum(
        abs(val) ** 2 * covol * float(q) ** v for (v, _), val in H.Hc.data.items()
    )
    brute = window + F.zeta1 * float(q) ** (-H.n1)
    if ext.kind == SPLIT:
        zeta_l = (1 - 1 / q) ** -2
    else:
        zeta_l = (1 - 1 / ext.qL) ** -1
    c_t = max(param.beta.torus_conductor, 1)
    filtration = 0.0
    for n in range(c_t, c_t + 2000):
        term = torus_coset_volume(ext, n)
        filtration += term
        if term < 1e-30:
            break
    closed = F.zeta1 / zeta_l * ext.qL ** (-(e - 1) / 2) * filtration
    a = 2 * param.n0 // e + e - 1
    bound = float(q) ** (-math.ceil(a / 2)) / 4
    return L2Proxy(float(brute), float(closed), float(bound))
