"""Quadratic etale algebras over the base field and their norm-one tori.

Three kinds of quadratic algebra L over F:

    split        L = F x F, conjugation swaps the coordinates
    unramified   L = F[w], w^2 = eps (the smallest unit nonresidue)
    ramified     L = F[w], w^2 = -t p, with the twist t = 1 when
                 p = 1 mod 4 and t = eps otherwise

The ramified twist is chosen so that -t is always a square.  With that
choice Nr(w) = t p generates the nontrivial norm class and the
quadratic character of F^x cut out by the norms is the Legendre unit
character extended by legendre(-1) at p.  That matches the twisted
shell family used by the transform closed forms, which is what pins the
convention package-wide.

Measures follow the base field: vol(O_F, dt) = 1, so vol(O_L, dz) = 1
for the split and unramified kinds and q^{-1/2} for the ramified kind
(self-dual normalization for the additive character composed with the
trace).  The norm-one torus carries the quotient measure d alpha of
|z|_L^{-1} dz by |r|^{-1} dr; a coset of the level-n congruence
subgroup has d alpha volume q^{-floor(n/e) - (e-1)/2}.

Everything here is exact: points carry integer coordinates modulo
p^prec, characters are stored as integer exponents against fixed
generators, and complex values only materialize at evaluation time as
roots of unity.

Characters of L^x restricting to the norm-class character on F^x are
built by the norm-one trick: x -> x / conj(x) maps the units of L onto
the integral torus (level by level), so a torus character beta1 yields
the character x -> [Legendre factor] * beta1(x / conj(x)), and every
extension of the norm-class character arises this way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import sympy

from .residue import (
    FieldModel,
    MultChar,
    enumerate_unit_chars,
    legendre,
    tau0,
    trivial_char,
    turn_int,
)

SPLIT = "split"
UNRAMIFIED = "unramified"
RAMIFIED = "ramified"

KINDS = (SPLIT, UNRAMIFIED, RAMIFIED)


# ----------------------------------------------------------------------
# The algebra


@dataclass(frozen=True)
class QuadExt:
    """A quadratic etale algebra over the base field."""

    F: FieldModel
    kind: str

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")

    # -- invariants --------------------------------------------------------

    @property
    def e(self) -> int:
        """Ramification index of L over F."""
        return 2 if self.kind == RAMIFIED else 1

    @property
    def f(self) -> int:
        """Residue degree of L over F."""
        return 2 if self.kind == UNRAMIFIED else 1

    @property
    def qL(self) -> int:
        return self.F.q**self.f

    @property
    def twist(self) -> int:
        """The unit t in the defining relation w^2 = -t p (ramified only)."""
        if self.kind != RAMIFIED:
            raise ValueError("twist is only defined for the ramified kind")
        return 1 if self.F.p % 4 == 1 else self.F.nonresidue

    def w_square(self) -> int:
        """The integer w^2 defining the field kinds."""
        if self.kind == UNRAMIFIED:
            return self.F.nonresidue
        if self.kind == RAMIFIED:
            return -self.twist * self.F.p
        raise ValueError("the split algebra has no generator w")

    # -- basic points --------------------------------------------------------

    def one(self, prec: int) -> "LPoint":
        return LPoint(self, 1, 1 if self.kind == SPLIT else 0, prec)

    def minus_one(self, prec: int) -> "LPoint":
        return LPoint(self, -1, -1 if self.kind == SPLIT else 0, prec)

    def gen_w(self, prec: int) -> "LPoint":
        """The generator w (the uniformizer, for the ramified kind)."""
        if self.kind == SPLIT:
            raise ValueError("the split algebra has no generator w")
        return LPoint(self, 0, 1, prec)

    def embed_unit(self, u: int, prec: int) -> "LPoint":
        """The image of a base-field unit under F -> L."""
        if u % self.F.p == 0:
            raise ValueError("embed_unit expects a unit")
        return LPoint(self, u, u if self.kind == SPLIT else 0, prec)

    # -- measures ------------------------------------------------------------

    def algebra_volume(self) -> float:
        """vol(O_L, dz) under the self-dual normalization."""
        return self.F.q ** (-(self.e - 1) / 2)

    def unit_volume(self) -> float:
        """vol(O_L^x, dz)."""
        if self.kind == SPLIT:
            return (1 - 1 / self.F.q) ** 2
        return self.algebra_volume() * (1 - 1 / self.qL)


def split_ext(F: FieldModel) -> QuadExt:
    return QuadExt(F, SPLIT)


def unramified_ext(F: FieldModel) -> QuadExt:
    return QuadExt(F, UNRAMIFIED)


def ramified_ext(F: FieldModel) -> QuadExt:
    return QuadExt(F, RAMIFIED)


def all_exts(F: FieldModel) -> tuple[QuadExt, QuadExt, QuadExt]:
    return split_ext(F), unramified_ext(F), ramified_ext(F)


# ----------------------------------------------------------------------
# Points


@dataclass(frozen=True)
class LPoint:
    """A point of the algebra with exact coordinates mod p^prec.

    Split kind: the pair (a, b) itself.  Field kinds: a + b w.  Only
    integral points are representable.
    """

    ext: QuadExt
    a: int
    b: int
    prec: int

    def __post_init__(self) -> None:
        mod = self.ext.F.p**self.prec
        object.__setattr__(self, "a", self.a % mod)
        object.__setattr__(self, "b", self.b % mod)

    # -- ring operations -----------------------------------------------------

    def _join(self, other: "LPoint") -> int:
        if self.ext != other.ext:
            raise ValueError("points of different algebras")
        return min(self.prec, other.prec)

    def __mul__(self, other: "LPoint") -> "LPoint":
        prec = self._join(other)
        mod = self.ext.F.p**prec
        if self.ext.kind == SPLIT:
            return LPoint(self.ext, self.a * other.a % mod, self.b * other.b % mod, prec)
        w2 = self.ext.w_square()
        a = (self.a * other.a + w2 * self.b * other.b) % mod
        b = (self.a * other.b + self.b * other.a) % mod
        return LPoint(self.ext, a, b, prec)

    def __add__(self, other: "LPoint") -> "LPoint":
        return LPoint(self.ext, self.a + other.a, self.b + other.b, self._join(other))

    def __sub__(self, other: "LPoint") -> "LPoint":
        return LPoint(self.ext, self.a - other.a, self.b - other.b, self._join(other))

    def __neg__(self) -> "LPoint":
        return LPoint(self.ext, -self.a, -self.b, self.prec)

    def conj(self) -> "LPoint":
        if self.ext.kind == SPLIT:
            return LPoint(self.ext, self.b, self.a, self.prec)
        return LPoint(self.ext, self.a, -self.b, self.prec)

    def trace(self) -> int:
        """Tr(x) as an integer mod p^prec."""
        mod = self.ext.F.p**self.prec
        if self.ext.kind == SPLIT:
            return (self.a + self.b) % mod
        return 2 * self.a % mod

    def norm(self) -> int:
        """Nr(x) as an integer mod p^prec."""
        mod = self.ext.F.p**self.prec
        if self.ext.kind == SPLIT:
            return self.a * self.b % mod
        return (self.a * self.a - self.ext.w_square() * self.b * self.b) % mod

    @property
    def is_unit(self) -> bool:
        p = self.ext.F.p
        if self.ext.kind == SPLIT:
            return self.a % p != 0 and self.b % p != 0
        if self.ext.kind == UNRAMIFIED:
            return self.a % p != 0 or self.b % p != 0
        return self.a % p != 0

    def inverse(self) -> "LPoint":
        if not self.is_unit:
            raise ZeroDivisionError("inverse of a non-unit point")
        mod = self.ext.F.p**self.prec
        if self.ext.kind == SPLIT:
            return LPoint(self.ext, pow(self.a, -1, mod), pow(self.b, -1, mod), self.prec)
        nr_inv = pow(self.norm(), -1, mod)
        co = self.conj()
        return LPoint(self.ext, co.a * nr_inv, co.b * nr_inv, self.prec)

    def __pow__(self, n: int) -> "LPoint":
        base = self if n >= 0 else self.inverse()
        n = abs(n)
        out = self.ext.one(self.prec)
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def torus_part(self) -> "LPoint":
        """x / conj(x), a point of norm one."""
        return self * self.conj().inverse()

    # -- congruence structure --------------------------------------------------

    def in_ideal(self, n: int) -> bool:
        """Whether the point lies in P_L^n (n >= 0)."""
        if n <= 0:
            return True
        p = self.ext.F.p
        if self.ext.kind == RAMIFIED:
            ka, kb = (n + 1) // 2, n // 2
            if self.prec < ka:
                raise ValueError("insufficient precision for the ideal test")
            return self.a % p**ka == 0 and self.b % p**kb == 0
        if self.prec < n:
            raise ValueError("insufficient precision for the ideal test")
        return self.a % p**n == 0 and self.b % p**n == 0

    def coset_key(self, n: int) -> tuple[int, ...]:
        """Canonical key of the coset x (1 + P_L^n) for a unit point x."""
        if n <= 0:
            return ()
        p = self.ext.F.p
        if self.ext.kind == RAMIFIED:
            ka, kb = (n + 1) // 2, n // 2
            if self.prec < ka:
                raise ValueError("insufficient precision for the coset key")
            return (self.a % p**ka, self.b % p**kb)
        if self.prec < n:
            raise ValueError("insufficient precision for the coset key")
        return (self.a % p**n, self.b % p**n)

    def reduce(self, prec: int) -> "LPoint":
        if prec > self.prec:
            raise ValueError("cannot raise the precision of a point")
        return LPoint(self.ext, self.a, self.b, prec)


# ----------------------------------------------------------------------
# Base-field square roots (Hensel lifting of unit squares)


def unit_sqrt(F: FieldModel, u: int, prec: int) -> int | None:
    """A square root of the unit u mod p^prec, or None for a nonsquare."""
    p = F.p
    u = u % p**prec
    if u % p == 0:
        raise ValueError("unit_sqrt expects a unit")
    if legendre(u, p) != 1:
        return None
    r = int(sympy.ntheory.sqrt_mod(u % p, p))
    k = 1
    while k < prec:
        k = min(2 * k, prec)
        mod = p**k
        r = (r - (r * r - u) * pow(2 * r, -1, mod)) % mod
    return r


# ----------------------------------------------------------------------
# Norm-one torus levels


def torus_count(ext: QuadExt, n: int) -> int:
    """Number of cosets of the level-n subgroup in the integral torus."""
    if n <= 0:
        return 1
    q = ext.F.q
    if ext.kind == SPLIT:
        return (q - 1) * q ** (n - 1)
    if ext.kind == UNRAMIFIED:
        return (q + 1) * q ** (n - 1)
    return 2 * q ** (n // 2)


def torus_coset_volume(ext: QuadExt, n: int) -> float:
    """d alpha volume of one coset of the level-n congruence subgroup."""
    q = ext.F.q
    return float(q) ** (-(n // ext.e) - (ext.e - 1) / 2)


def torus_volume(ext: QuadExt) -> float:
    """Total d alpha volume of the integral points of the torus."""
    q = ext.F.q
    if ext.kind == SPLIT:
        return 1 - 1 / q
    if ext.kind == UNRAMIFIED:
        return 1 + 1 / q
    return 2 / math.sqrt(q)


def prec_for_depth(ext: QuadExt, depth: int) -> int:
    """Coordinate precision that resolves cosets at the given P_L-level."""
    return max(1, -(-depth // ext.e) + 1)


@lru_cache(maxsize=None)
def _residue_gen_unram(p: int) -> tuple[int, int]:
    """A generator of the multiplicative group of the quadratic residue
    field, as coordinates (a, b) against sqrt(eps)."""
    F = FieldModel(p)
    ext = unramified_ext(F)
    order = p * p - 1
    facs = sympy.primefactors(order)
    for a in range(p):
        for b in range(1, p):
            x = LPoint(ext, a, b, 1)
            if not x.is_unit:
                continue
            if all((x ** (order // ell)).coset_key(1) != (1, 0) for ell in facs):
                return a, b
    raise AssertionError("no generator of the quadratic residue field found")


def _teichmueller(x: LPoint) -> LPoint:
    """The Teichmueller representative above a unit (unramified kind)."""
    qq = x.ext.qL
    out = x
    for _ in range(x.prec + 1):
        out = out**qq
    return out


@dataclass(frozen=True)
class TorusLevel:
    """The integral norm-one torus modulo its level-`depth` subgroup.

    The quotient is a single cycle generated by `gen` for the split and
    unramified kinds, and {+1, -1} times a cycle for the ramified kind.
    Representatives are the walk powers of the generator, so a walk
    index doubles as a discrete logarithm.
    """

    ext: QuadExt
    depth: int
    gen: LPoint
    cycle_order: int
    signed: bool

    @property
    def size(self) -> int:
        return self.cycle_order * (2 if self.signed else 1)

    def reps(self) -> list[LPoint]:
        """All coset representatives, in walk order (sign-major)."""
        out = []
        x = self.ext.one(self.gen.prec)
        for _ in range(self.cycle_order):
            out.append(x)
            x = x * self.gen
        if self.signed:
            out.extend(-y for y in out[: self.cycle_order])
        return out

    def dlog(self) -> dict[tuple[int, ...], tuple[int, int]]:
        """Map coset key -> (cycle index, sign bit)."""
        table = {}
        x = self.ext.one(self.gen.prec)
        for k in range(self.cycle_order):
            table[x.coset_key(self.depth)] = (k, 0)
            if self.signed:
                table[(-x).coset_key(self.depth)] = (k, 1)
            x = x * self.gen
        return table


@lru_cache(maxsize=None)
def torus_level(ext: QuadExt, depth: int) -> TorusLevel:
    """Build the level-`depth` torus quotient with a verified generator."""
    prec = prec_for_depth(ext, depth)
    if depth <= 0:
        return TorusLevel(ext, 0, ext.one(prec), 1, False)
    F = ext.F
    p = F.p
    if ext.kind == SPLIT:
        g = int(sympy.ntheory.primitive_root(p**depth))
        gen = LPoint(ext, g, pow(g, -1, p**prec), prec)
        order = (p - 1) * p ** (depth - 1)
        signed = False
    elif ext.kind == UNRAMIFIED:
        a, b = _residue_gen_unram(p)
        zeta = _teichmueller(LPoint(ext, a, b, prec))
        g1 = zeta ** (p - 1)
        if g1.norm() != 1:
            raise AssertionError("Teichmueller walk generator is not norm-one")
        gen = g1 * LPoint(ext, 1, p, prec).torus_part() if depth > 1 else g1
        order = (p + 1) * p ** (depth - 1)
        signed = False
    else:
        gen = (ext.one(prec) + ext.gen_w(prec)).torus_part()
        order = p ** (depth // 2)
        signed = True
    if gen.norm() != 1:
        raise AssertionError("torus walk generator is not norm-one")
    level = TorusLevel(ext, depth, gen, order, signed)
    _check_cycle_order(level)
    return level


def _check_cycle_order(level: TorusLevel) -> None:
    one_key = level.ext.one(level.gen.prec).coset_key(level.depth)
    if (level.gen**level.cycle_order).coset_key(level.depth) != one_key:
        raise AssertionError("torus generator order too large")
    for ell in sympy.primefactors(level.cycle_order):
        if (level.gen ** (level.cycle_order // ell)).coset_key(level.depth) == one_key:
            raise AssertionError("torus generator order too small")


@lru_cache(maxsize=None)
def _torus_dlog(ext: QuadExt, depth: int) -> dict[tuple[int, ...], tuple[int, int]]:
    return torus_level(ext, depth).dlog()


# ----------------------------------------------------------------------
# The norm-class character of F^x and the transfer constant


def norm_class_char(ext: QuadExt) -> MultChar:
    """The quadratic character of F^x whose kernel is the norm group."""
    F = ext.F
    if ext.kind == SPLIT:
        return trivial_char(F, 1.0 + 0.0j)
    if ext.kind == UNRAMIFIED:
        return MultChar(F, 0, 0, -1.0 + 0.0j)
    sign = float(legendre(-1, F.p))
    return MultChar(F, 1, (F.p - 1) // 2, complex(sign))


def weil_index(ext: QuadExt) -> complex:
    """The normalized quadratic Gauss constant attached to L over F.

    Equals 1 for the non-ramified kinds.  For the ramified kind it is
    the epsilon value of the norm-class character: a unimodular number
    whose square is the norm-class value at -1.
    """
    if ext.kind != RAMIFIED:
        return 1.0 + 0.0j
    F = ext.F
    return legendre(-1, F.p) * tau0(F) * math.sqrt(F.q)


# ----------------------------------------------------------------------
# Points of prescribed norm


def norm_class_reps(ext: QuadExt) -> tuple[tuple[int, int], ...]:
    """Pairs (v, u) with p^v u running over Nr(L^x) mod squares of F^x."""
    if ext.kind == RAMIFIED:
        return ((0, 1), (1, ext.twist))
    return ((0, 1), (0, ext.F.nonresidue))


def point_with_norm(ext: QuadExt, v: int, u: int, prec: int) -> LPoint:
    """An integral point of norm p^v u, exact mod p^prec.

    Split points carry trace 1 + p^v u (the pinned section).  Raises if
    p^v u is not the norm of an integral point.
    """
    F = ext.F
    p = F.p
    if u % p == 0:
        raise ValueError("the unit part must be a unit")
    if v < 0:
        raise ValueError("only integral norms have integral sections")
    if ext.kind == SPLIT:
        return LPoint(ext, 1, p**v * u, prec)
    if ext.kind == UNRAMIFIED:
        if v % 2 != 0:
            raise ValueError("not a norm from the unramified algebra")
        core = _conic_point(ext, u, prec)
        scale = p ** (v // 2)
        return LPoint(ext, scale * core.a, scale * core.b, prec)
    mod = p**prec
    u_unit = u * pow(pow(ext.twist, v, mod), -1, mod) % mod
    r = unit_sqrt(F, u_unit, prec)
    if r is None:
        raise ValueError("not a norm from the ramified algebra")
    return ext.gen_w(prec) ** v * LPoint(ext, r, 0, prec)


def _conic_point(ext: QuadExt, u: int, prec: int) -> LPoint:
    """A unit point of the unramified algebra with norm the unit u."""
    F = ext.F
    p = F.p
    eps = F.nonresidue
    mod = p**prec
    u = u % mod
    for a0 in range(p):
        for b0 in range(p):
            if (a0 * a0 - eps * b0 * b0 - u) % p != 0:
                continue
            if a0 % p != 0:
                r = unit_sqrt(F, (u + eps * b0 * b0) % mod, prec)
                if r is None:
                    continue
                if (r - a0) % p != 0:
                    r = -r % mod
                return LPoint(ext, r, b0, prec)
            r = unit_sqrt(F, (a0 * a0 - u) * pow(eps, -1, mod) % mod, prec)
            if r is None:
                continue
            if (r - b0) % p != 0:
                r = -r % mod
            return LPoint(ext, a0, r, prec)
    raise AssertionError("norm equation unexpectedly insoluble")


# ----------------------------------------------------------------------
# Characters of L^x extending the norm-class character


@dataclass(frozen=True)
class ExtChar:
    """A character of L^x restricting to the norm-class character on F^x.

    Nonsplit kinds: on units, value(x) = [Legendre factor, ramified
    kind only] * beta1(x / conj x), where beta1 is the character of the
    integral torus with exponent `expo` against the level-`level` walk
    generator; `at_unif` is the value at the uniformizer of L (forced
    to -1 for the unramified kind; for the ramified kind a free sign
    times a square root of the norm-class value at -1).

    Split kind: value(x, y) = chi0(x) / chi0(y).
    """

    ext: QuadExt
    level: int
    expo: int
    at_unif: complex
    chi0: MultChar | None = None

    # -- structure ---------------------------------------------------------

    @property
    def torus_order(self) -> int:
        return torus_level(self.ext, self.level).cycle_order

    # -- conductors ----------------------------------------------------------

    @property
    def conductor(self) -> int:
        """Smallest c >= 0 with trivial values on 1 + P_L^c."""
        if self.ext.kind == SPLIT:
            return self.chi0.conductor
        c = max(self.level, 1)
        while c >= 1 and self._trivial_on_layer(c - 1):
            c -= 1
        return c

    def _trivial_on_layer(self, m: int) -> bool:
        """Trivial on (1 + P_L^m)/(1 + P_L^{m+1}); assumes triviality above."""
        if m == 0:
            return self._trivial_on_units_mod_principal()
        p = self.ext.F.p
        prec = prec_for_depth(self.ext, max(self.level, m + 2))
        one = self.ext.one(prec)
        if self.ext.kind == RAMIFIED:
            if m % 2 == 0:
                gens = [LPoint(self.ext, p ** (m // 2), 0, prec)]
            else:
                gens = [LPoint(self.ext, 0, p ** (m // 2), prec)]
        else:
            gens = [
                LPoint(self.ext, p**m, 0, prec),
                LPoint(self.ext, 0, p**m, prec),
            ]
        return all(abs(self.eval(one + g) - 1) < 1e-9 for g in gens)

    def _trivial_on_units_mod_principal(self) -> bool:
        if self.ext.kind == RAMIFIED:
            return False  # the Legendre factor is nontrivial on units
        return self.expo % self.torus_order == 0

    @property
    def torus_conductor(self) -> int:
        """Smallest c >= 0 with trivial values on the level-c torus subgroup.

        On the torus itself the character reads x -> [Legendre factor]
        * beta1(x^2), so the exponent conditions involve a doubling at
        level zero (where the quotient may have even order).
        """
        if self.ext.kind == SPLIT:
            return (self.chi0 * self.chi0).conductor
        c = self.level
        while c >= 0 and self._trivial_on_torus_level(c):
            c -= 1
        return c + 1

    def _trivial_on_torus_level(self, c: int) -> bool:
        order = self.torus_order
        if self.ext.kind == UNRAMIFIED:
            if c >= 1:
                return self.expo * torus_count(self.ext, c) % order == 0
            return 2 * self.expo % order == 0
        q = self.ext.F.q
        if c >= 1:
            return self.expo * q ** (c // 2) % order == 0
        prec = prec_for_depth(self.ext, self.level)
        return (
            self.expo % order == 0
            and abs(self.eval(self.ext.minus_one(prec)) - 1) < 1e-9
        )

    @property
    def is_regular(self) -> bool:
        """Whether the character differs from its conjugate."""
        return self.torus_conductor >= 1

    # -- evaluation ------------------------------------------------------------

    def eval(self, x: LPoint) -> complex:
        """Value at an integral point (a unit times a uniformizer power)."""
        if self.ext.kind == SPLIT:
            return self._eval_split(x)
        p = self.ext.F.p
        k = 0
        while not x.is_unit:
            if x.prec < 2:
                raise ValueError("point precision exhausted during division")
            if self.ext.kind == UNRAMIFIED:
                if x.a % p or x.b % p:
                    raise ValueError("point is not integral after division")
                x = LPoint(x.ext, x.a // p, x.b // p, x.prec - 1)
            else:
                # x / w = b + (a / (w^2)) w = b - (a/p) t^{-1} w
                if x.a % p:
                    raise ValueError("point is not integral after division")
                mod = p ** (x.prec - 1)
                t_inv = pow(self.ext.twist, -1, mod)
                x = LPoint(x.ext, x.b, -(x.a // p) * t_inv, x.prec - 1)
            k += 1
        val = self.at_unif**k if k else 1.0 + 0.0j
        return val * self._eval_unit(x)

    def _eval_split(self, x: LPoint) -> complex:
        p = self.ext.F.p
        va = vb = 0
        a, b = x.a, x.b
        if a == 0 or b == 0:
            raise ValueError("split point with an indeterminate coordinate")
        while a % p == 0:
            a //= p
            va += 1
        while b % p == 0:
            b //= p
            vb += 1
        mod_pow = x.prec - max(va, vb)
        if mod_pow < max(self.chi0.level, 1):
            raise ValueError("point precision too low for character evaluation")
        mod = p**mod_pow
        u = a * pow(b, -1, mod) % mod
        return self.chi0.eval_vu(va - vb, u)

    def _eval_unit(self, x: LPoint) -> complex:
        val = 1.0 + 0.0j
        if self.ext.kind == RAMIFIED:
            val = complex(legendre(x.a, self.ext.F.p))
        if self.expo % self.torus_order == 0:
            return val
        if x.prec < prec_for_depth(self.ext, self.level):
            raise ValueError("point precision too low for character evaluation")
        key = x.torus_part().coset_key(self.level)
        k, sign = _torus_dlog(self.ext, self.level)[key]
        if sign:
            # x / conj(x) has residue 1 for the field kinds, so the
            # signed branch of the ramified walk is unreachable here
            raise AssertionError("torus projection landed on the signed branch")
        return val * turn_int(self.expo * k, self.torus_order)

    def __call__(self, x: LPoint) -> complex:
        return self.eval(x)


# -- constructors -----------------------------------------------------------


def ext_char_split(ext: QuadExt, chi0: MultChar) -> ExtChar:
    if ext.kind != SPLIT:
        raise ValueError("split constructor on a nonsplit algebra")
    if chi0.at_pi is None:
        chi0 = chi0.with_at_pi(1.0 + 0.0j)
    return ExtChar(ext, max(chi0.conductor, 1), 0, 1.0 + 0.0j, chi0)


def ext_char_unramified(ext: QuadExt, expo: int, level: int) -> ExtChar:
    if ext.kind != UNRAMIFIED:
        raise ValueError("unramified constructor on the wrong kind")
    return ExtChar(ext, level, expo, -1.0 + 0.0j)


def ext_char_ramified(ext: QuadExt, expo: int, level: int, sign: int = 1) -> ExtChar:
    if ext.kind != RAMIFIED:
        raise ValueError("ramified constructor on the wrong kind")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    root = 1.0 + 0.0j if legendre(-1, ext.F.p) == 1 else 1.0j
    return ExtChar(ext, level, expo, sign * root)


def enumerate_ext_chars(
    ext: QuadExt, n0: int, sign: int = 1, regular_only: bool = False
) -> list[ExtChar]:
    """All characters of exact conductor n0 (one uniformizer branch).

    Split kind: built from unit characters chi0 of conductor n0 with
    trivial value at p.  Ramified kind: empty for odd n0.
    """
    out: list[ExtChar] = []
    if ext.kind == SPLIT:
        for chi0 in enumerate_unit_chars(ext.F, max(n0, 1), conductor=n0):
            out.append(ext_char_split(ext, chi0.with_at_pi(1.0 + 0.0j)))
    elif ext.kind == RAMIFIED and n0 % 2 != 0:
        return []
    else:
        tor = torus_level(ext, n0)
        for j in range(1, tor.cycle_order):
            if ext.kind == UNRAMIFIED:
                b = ext_char_unramified(ext, j, n0)
            else:
                b = ext_char_ramified(ext, j, n0, sign)
            if b.conductor == n0:
                out.append(b)
    if regular_only:
        out = [b for b in out if b.is_regular]
    return out


# ----------------------------------------------------------------------
# Additive parameters


def _psi_ratio(F: FieldModel, num: int, den_pow: int) -> complex:
    """psi(num / p^den_pow) for an integer num."""
    if den_pow <= 0:
        return 1.0 + 0.0j
    return turn_int(num % F.p**den_pow, F.p**den_pow)


def _offset_reps(ext: QuadExt, m: int, n0: int) -> list[tuple[int, int]]:
    """Coordinate representatives of P_L^m modulo P_L^{n0}."""
    p = ext.F.p
    if ext.kind == RAMIFIED:
        ka_lo, kb_lo = (m + 1) // 2, m // 2
        ka_hi, kb_hi = (n0 + 1) // 2, n0 // 2
        return [
            (p**ka_lo * i, p**kb_lo * j)
            for i in range(p ** (ka_hi - ka_lo))
            for j in range(p ** (kb_hi - kb_lo))
        ]
    return [
        (p**m * i, p**m * j)
        for i in range(p ** (n0 - m))
        for j in range(p ** (n0 - m))
    ]


@lru_cache(maxsize=None)
def additive_parameter(b: ExtChar) -> int:
    """The unit c encoding b near 1 through the additive character.

    On 1 + P_L^{floor(n0/2)} the character is
        b(1 + u) = psi(c * S(u) / p^k),
    with S a kind- and parity-dependent integer form in the coordinates
    of u, and k = n0 for the unramified base direction or n0/2 for the
    ramified kind.  The value is pinned modulo p^{ceil(n0/(2e))} and is
    verified here exhaustively; raises if no unit (or more than one
    residue) satisfies the identity.
    """
    ext = b.ext
    F = ext.F
    p = F.p
    n0 = b.conductor
    if n0 < 2:
        # the defining logarithm identity needs a proper principal
        # congruence neighborhood, which only exists from conductor 2 on
        raise ValueError("additive parameter needs conductor at least 2")
    if ext.kind == RAMIFIED and n0 % 2 != 0:
        raise ValueError("ramified-kind characters have even conductor")
    m = n0 // 2
    det_mod = p ** max(1, -(-n0 // (2 * ext.e)))
    prec = n0 + 2
    one = ext.one(prec)
    inv2 = pow(2, -1, p ** (n0 + 1))
    values = []
    for ua, ub in _offset_reps(ext, m, n0):
        u = LPoint(ext, ua, ub, prec)
        values.append((ua, ub, b.eval(one + u)))
    survivors = []
    for c in range(1, det_mod):
        if c % p == 0:
            continue
        if all(
            abs(val - _additive_rhs(ext, c, ua, ub, n0, inv2)) < 1e-8
            for ua, ub, val in values
        ):
            survivors.append(c)
    if len(survivors) == 0:
        raise ArithmeticError("no additive parameter matches the character")
    if len(survivors) > 1:
        raise ArithmeticError("additive parameter not pinned at the stated modulus")
    return survivors[0]


def _additive_rhs(ext: QuadExt, c: int, ua: int, ub: int, n0: int, inv2: int) -> complex:
    F = ext.F
    if ext.kind == SPLIT:
        delta = ua - ub
        if n0 % 2 == 0:
            return _psi_ratio(F, c * delta, n0)
        return _psi_ratio(F, c * (delta - (ua * ua - ub * ub) * inv2), n0)
    if ext.kind == UNRAMIFIED:
        eps = F.nonresidue
        if n0 % 2 == 0:
            return _psi_ratio(F, c * 2 * ub * eps, n0)
        return _psi_ratio(F, c * (2 * ub * eps - 2 * ua * ub * eps), n0)
    # ramified kind: psi(w^{-n0-1} c (u - conj u)) = psi(2 ub c / w^{n0})
    half = n0 // 2
    mod = F.p ** (n0 + 1)
    wsq_inv = pow(-ext.twist % mod, -1, mod)
    return _psi_ratio(F, 2 * ub * c * pow(wsq_inv, half, mod), half)


@lru_cache(maxsize=None)
def char_additive_parameter(F: FieldModel, chi: MultChar) -> int:
    """The additive parameter of a ramified unit character of F^x.

    The unique unit residue c mod p^{ceil(n/2)} with
        chi(1 + x) = psi(c (x - x^2/2) / p^n)
    for all x in P^{floor(n/2)}, n the conductor.  Agrees with the
    additive parameter of the split-kind character built from chi.
    """
    n = chi.conductor
    if n < 2:
        raise ValueError("additive parameter needs conductor at least 2")
    p = F.p
    m = n // 2
    det_mod = p ** (-(-n // 2))
    big = p ** (n + 1)
    inv2 = pow(2, -1, big)
    vals = [(x, chi.eval_unit(1 + x)) for x in (p**m * i for i in range(p ** (n - m)))]
    survivors = [
        c
        for c in range(1, det_mod)
        if c % p != 0
        and all(
            abs(v - _psi_ratio(F, c * ((x - x * x * inv2) % big), n)) < 1e-8
            for x, v in vals
        )
    ]
    if len(survivors) != 1:
        raise ArithmeticError("additive parameter not pinned at the stated modulus")
    return survivors[0]


# ----------------------------------------------------------------------
# Oscillatory slice integrals (square-root cancellation envelopes)


def slice_integral(b: ExtChar, chi: MultChar, n: int) -> complex:
    """Correlation of the extension character on an inner slice with chi.

    Unramified base direction (e = 1), for 0 <= n < n0:
        int_{O^x} b(section(1 + p^{n0-n} t)) chi(t) dt
    where the section feeds (1 + x)/(1 - x) to chi0 for the split kind
    and 1 + p^{n0-n} t w to the character for the unramified kind.

    Ramified kind (e = 2), for 0 <= n <= n0/2:
        int_{O^x} b(1 + p^{n0/2-n} t w) chi(t) dt

    Envelope: |value| <= 2 q^{-n/2}.
    """
    ext = b.ext
    F = ext.F
    p = F.p
    n0 = b.conductor
    if ext.kind == RAMIFIED:
        if not 0 <= n <= n0 // 2:
            raise ValueError("slice depth out of range")
        shift = p ** (n0 // 2 - n)
    else:
        if not 0 <= n < n0:
            raise ValueError("slice depth out of range")
        shift = p ** (n0 - n)
    lev = max(chi.conductor, n, 1)
    mod = p**lev
    prec = n0 + lev + 2
    total = 0.0 + 0.0j
    if ext.kind == SPLIT:
        big = p ** (n0 + lev)
        for t in F.unit_reps(lev):
            u = (1 + shift * t) * pow(1 - shift * t, -1, big) % big
            total += b.chi0.eval_unit(u) * chi.eval_unit(t)
        return total / mod
    for t in F.unit_reps(lev):
        total += b.eval(LPoint(ext, 1, shift * t, prec)) * chi.eval_unit(t)
    return total / mod


def boundary_integral(b: ExtChar, chi: MultChar, k: int) -> complex:
    """The boundary slice at depth n0 (split and unramified kinds).

    split:       int over units t outside +-1 + P of
                 chi0((1+t)/(1-t)) chi(t) legendre(1-t^2)^k dt
    unramified:  int over all units t of
                 b(1 + t w) chi(t) legendre(Nr(1+tw))^k dt

    Envelope: 2 q^{-n0/2} off the exceptional set, 2 q^{-n0/2+1/2} on it.
    """
    ext = b.ext
    F = ext.F
    p = F.p
    n0 = b.conductor
    if ext.kind == RAMIFIED:
        raise ValueError("boundary slices only arise over the unramified base direction")
    if k not in (0, 1):
        raise ValueError("the auxiliary quadratic twist exponent must be 0 or 1")
    lev = max(chi.conductor, n0, 1)
    mod = p**lev
    prec = n0 + lev + 2
    total = 0.0 + 0.0j
    if ext.kind == SPLIT:
        for t in F.unit_reps(lev):
            if (t - 1) % p == 0 or (t + 1) % p == 0:
                continue
            u = (1 + t) * pow(1 - t, -1, mod) % mod
            w = b.chi0.eval_unit(u) * chi.eval_unit(t)
            if k:
                w *= legendre(1 - t * t, p)
            total += w
        return total / mod
    eps = F.nonresidue
    for t in F.unit_reps(lev):
        w = b.eval(LPoint(ext, 1, t, prec)) * chi.eval_unit(t)
        if k:
            w *= legendre(1 - t * t * eps, p)
        total += w
    return total / mod


# ----------------------------------------------------------------------
# The exceptional characters of the boundary slice


def is_exceptional(b: ExtChar, chi: MultChar) -> bool:
    """Whether chi degrades the boundary-slice envelope by q^{1/2}.

    Nonempty only when the conductor is odd and legendre(-1) matches
    the norm-class value at p; membership is a residue congruence
    between the additive parameters of chi and of the character.
    """
    ext = b.ext
    F = ext.F
    p = F.p
    if ext.kind == RAMIFIED:
        return False
    n0 = b.conductor
    if n0 % 2 == 0 or n0 < 3:
        return False
    eps_l = 1 if ext.kind == SPLIT else -1
    if legendre(-1, p) != eps_l:
        return False
    if chi.conductor != n0:
        return False
    r = char_additive_parameter(F, chi) * pow(additive_parameter(b), -1, p) % p
    target = -1 if ext.kind == SPLIT else -F.nonresidue
    return (r * r - target) % p == 0
