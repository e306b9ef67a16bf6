"""Base non-archimedean field model at desk scale.

The field is the p-adic completion of the rationals for a small odd prime p,
with uniformizer p itself, residue cardinality q = p, the standard additive
character of conductor exponent zero, and multiplicative Haar measure
normalized so the unit group has volume one. Elements track valuation, a unit
residue, and the precision to which that residue is known; every operation
that would need digits beyond the tracked precision raises
:class:`PrecisionExhausted` instead of silently guessing.

Unit-group characters are stored as exponents against the smallest positive
primitive root of (Z/p^level)^x, so conductors, products, and inverses are
O(1) integer arithmetic, and all character values are exact roots of unity
(exposed both as :class:`fractions.Fraction` exponents of a full turn and as
complex numbers).
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterator

import sympy


class PrecisionExhausted(ArithmeticError):
    """Raised when a computation needs p-adic digits beyond those tracked."""


@lru_cache(maxsize=256)
def _root_table(den: int) -> tuple[complex, ...]:
    """All den-th roots of unity, indexed by numerator."""
    step = 2j * cmath.pi / den
    return tuple(cmath.exp(step * k) for k in range(den))


def turn_int(num: int, den: int) -> complex:
    """exp(2 pi i num/den) via a cached table of den-th roots."""
    if den > 2_000_000:
        return cmath.exp(2j * cmath.pi * ((num % den) / den))
    return _root_table(den)[num % den]


def turn(t: Fraction | int) -> complex:
    """exp(2 pi i t) for an exact fraction of a full turn."""
    if isinstance(t, int):
        return 1.0 + 0.0j
    return turn_int(t.numerator, t.denominator)


@lru_cache(maxsize=None)
def _dlog_table(p: int, n: int) -> tuple[int, dict[int, int]]:
    """Smallest positive primitive root of (Z/p^n)^x and its dlog table."""
    mod = p**n
    g = int(sympy.ntheory.primitive_root(mod))
    table: dict[int, int] = {}
    x = 1
    order = (p - 1) * p ** (n - 1)
    for k in range(order):
        table[x] = k
        x = x * g % mod
    return g, table


@lru_cache(maxsize=None)
def _unit_reps(p: int, n: int) -> tuple[int, ...]:
    if n == 0:
        return (1,)
    return tuple(u for u in range(1, p**n) if u % p != 0)


@lru_cache(maxsize=None)
def _conductor_of(p: int, level: int, expo: int) -> int:
    if level == 0 or expo == 0:
        return 0
    c = level
    e = expo
    while c > 1 and e % p == 0:
        e //= p
        c -= 1
    return c


@lru_cache(maxsize=None)
def _transport_expo(p: int, level: int, expo: int, n: int) -> int:
    """Exponent against the level-n generator of the character stored as
    ``expo`` against the level-``level`` generator."""
    if n == level:
        return expo
    if n > level:
        if level == 0 or expo == 0:
            return 0
        g_n, _ = _dlog_table(p, n)
        _, table_m = _dlog_table(p, level)
        lift = table_m[g_n % p**level]
        cap_n = (p - 1) * p ** (n - 1)
        return expo * lift * p ** (n - level) % cap_n
    if n == 0:
        if expo != 0:
            raise ValueError("cannot lower a ramified character to level 0")
        return 0
    drop = level - n
    if expo % p**drop != 0:
        raise ValueError("cannot lower below the conductor")
    g_m, _ = _dlog_table(p, level)
    _, table_n = _dlog_table(p, n)
    cap_n = (p - 1) * p ** (n - 1)
    d = table_n[g_m % p**n]
    return (expo // p**drop) * pow(d, -1, cap_n) % cap_n


@dataclass(frozen=True)
class FieldModel:
    """A p-adic base field with its fixed additive character and measures.

    Parameters
    ----------
    p:
        Odd prime; also the residue cardinality q and the uniformizer.
    prec:
        Default number of p-adic digits carried by exact element
        constructors. All desk-scale computations here stay far below it.
    """

    p: int
    prec: int = 24

    def __post_init__(self) -> None:
        if self.p < 3 or not sympy.isprime(self.p):
            raise ValueError(f"p must be an odd prime, got {self.p}")
        if self.prec < 4:
            raise ValueError("prec too small to be useful")

    @property
    def q(self) -> int:
        return self.p

    @property
    def zeta1(self) -> float:
        """zeta_F(1) = (1 - 1/q)^{-1}."""
        return 1.0 / (1.0 - 1.0 / self.q)

    @property
    def nonresidue(self) -> int:
        """Smallest positive quadratic non-residue mod p."""
        return _smallest_nonresidue(self.p)

    # ------------------------------------------------------------------
    # element constructors
    # ------------------------------------------------------------------

    def zero(self) -> "PAdic":
        return PAdic(self, 0, None, 0, exact_zero=True)

    def one(self) -> "PAdic":
        return self.unit(1)

    def unit(self, u: int, prec: int | None = None) -> "PAdic":
        return self.shell(0, u, prec)

    def shell(self, v: int, u: int, prec: int | None = None) -> "PAdic":
        """The element pi^v u for a unit residue u."""
        k = self.prec if prec is None else prec
        u %= self.p**k
        if u % self.p == 0:
            raise ValueError("unit residue must be prime to p")
        return PAdic(self, v, u, k)

    def element(self, x: int | Fraction) -> "PAdic":
        """Exact embedding of a rational number."""
        x = Fraction(x)
        if x == 0:
            return self.zero()
        v = 0
        num, den = x.numerator, x.denominator
        while num % self.p == 0:
            num //= self.p
            v += 1
        while den % self.p == 0:
            den //= self.p
            v -= 1
        mod = self.p**self.prec
        return PAdic(self, v, num * pow(den, -1, mod) % mod, self.prec)

    def small(self, v_min: int) -> "PAdic":
        """An element known only to lie in P^{v_min} (possibly zero)."""
        return PAdic(self, v_min, None, 0)

    # ------------------------------------------------------------------
    # measures
    # ------------------------------------------------------------------

    def coset_volume(self, level: int) -> float:
        """d^x-volume of a unit coset u(1+P^level) inside any shell."""
        if level <= 0:
            return 1.0
        return self.zeta1 * self.q ** (-level)

    def unit_reps(self, level: int) -> tuple[int, ...]:
        """Representatives of O^x/(1+P^level); (1,) at level zero."""
        return _unit_reps(self.p, level)


@lru_cache(maxsize=None)
def _smallest_nonresidue(p: int) -> int:
    for u in range(2, p):
        if pow(u, (p - 1) // 2, p) == p - 1:
            return u
    raise ValueError("no quadratic non-residue found")


def legendre(u: int, p: int) -> int:
    """Legendre symbol of u mod p (0 on multiples of p)."""
    r = pow(u % p, (p - 1) // 2, p)
    if r == 1:
        return 1
    if r == p - 1:
        return -1
    return 0


@dataclass(frozen=True)
class PAdic:
    """A field element pi^v u with the unit residue u known mod p^prec.

    ``unit is None`` encodes an element known only to lie in P^v (the
    aftermath of additive cancellation); such elements answer containment
    questions but raise :class:`PrecisionExhausted` for anything needing a
    digit. ``exact_zero`` marks the true zero.
    """

    F: FieldModel
    v: int
    unit: int | None
    prec: int
    exact_zero: bool = False

    # -- predicates ----------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return self.exact_zero

    @property
    def is_fuzzy(self) -> bool:
        return self.unit is None and not self.exact_zero

    def valuation(self) -> int:
        if self.exact_zero:
            raise ValueError("the zero element has no finite valuation")
        if self.is_fuzzy:
            raise PrecisionExhausted(
                f"valuation known only to satisfy v >= {self.v}"
            )
        return self.v

    def v_at_least(self, bound: int) -> bool:
        """Whether v(x) >= bound is certain (zero counts as deep)."""
        if self.exact_zero:
            return True
        return self.v >= bound

    def unit_mod(self, k: int) -> int:
        """The unit residue mod p^k."""
        if self.exact_zero or self.is_fuzzy:
            raise PrecisionExhausted("no unit residue available")
        if k > self.prec:
            raise PrecisionExhausted(
                f"unit known mod p^{self.prec}, requested p^{k}"
            )
        return self.unit % self.F.p**k

    # -- arithmetic ----------------------------------------------------

    def __mul__(self, other: "PAdic") -> "PAdic":
        F = self.F
        if self.exact_zero or other.exact_zero:
            return F.zero()
        if self.is_fuzzy or other.is_fuzzy:
            return F.small(self.v + other.v)
        k = min(self.prec, other.prec)
        mod = F.p**k
        return PAdic(F, self.v + other.v, self.unit * other.unit % mod, k)

    def inverse(self) -> "PAdic":
        if self.exact_zero:
            raise ZeroDivisionError("inverse of zero")
        if self.is_fuzzy:
            raise PrecisionExhausted("inverse of an element without digits")
        mod = self.F.p**self.prec
        return PAdic(self.F, -self.v, pow(self.unit, -1, mod), self.prec)

    def __neg__(self) -> "PAdic":
        if self.exact_zero or self.is_fuzzy:
            return self
        mod = self.F.p**self.prec
        return PAdic(self.F, self.v, -self.unit % mod, self.prec)

    def __add__(self, other: "PAdic") -> "PAdic":
        F = self.F
        if self.exact_zero:
            return other
        if other.exact_zero:
            return self
        a, b = (self, other) if self.v <= other.v else (other, self)
        if a.is_fuzzy or b.is_fuzzy:
            return F.small(a.v)
        # additive knowledge: a mod p^{v_a + prec_a}, b likewise
        known = min(a.v + a.prec, b.v + b.prec)
        mod = F.p ** (known - a.v)
        s = (a.unit + b.unit * F.p ** (b.v - a.v)) % mod
        if s == 0:
            return F.small(known)
        v_extra = 0
        while s % F.p == 0:
            s //= F.p
            v_extra += 1
            mod //= F.p
        return PAdic(F, a.v + v_extra, s % mod, known - a.v - v_extra)

    def __sub__(self, other: "PAdic") -> "PAdic":
        return self + (-other)

    def __pow__(self, n: int) -> "PAdic":
        if n == 0:
            return self.F.one()
        if n < 0:
            return self.inverse() ** (-n)
        out = self
        for _ in range(n - 1):
            out = out * self
        return out


# ----------------------------------------------------------------------
# additive character
# ----------------------------------------------------------------------


def psi_frac_vu(F: FieldModel, v: int, u: int) -> Fraction:
    """Exact exponent (fraction of a turn) of psi at pi^v u."""
    if v >= 0:
        return Fraction(0)
    m = -v
    return Fraction(u % F.p**m, F.p**m)


def psi_vu(F: FieldModel, v: int, u: int) -> complex:
    """psi at the shell element pi^v u; 1 on the ring of integers."""
    if v >= 0:
        return 1.0 + 0.0j
    mod = F.p ** (-v)
    return turn_int(u, mod)


def psi_eval(F: FieldModel, x: PAdic) -> complex:
    """psi(x) for a tracked element (raises if digits are missing)."""
    if x.exact_zero or x.v >= 0:
        return 1.0 + 0.0j
    if x.is_fuzzy:
        raise PrecisionExhausted("psi needs the unit residue below level 0")
    return psi_vu(F, x.v, x.unit_mod(-x.v))


# ----------------------------------------------------------------------
# multiplicative characters of the unit group (optionally with a value
# at the uniformizer)
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class MultChar:
    """A character of F^x stored at a finite unit level.

    The unit part is the exponent ``expo`` against the smallest positive
    primitive root of (Z/p^level)^x; ``at_pi`` is the (possibly None)
    complex value at the uniformizer. ``at_pi is None`` means the character
    is only used on units (a character of O^x).
    """

    F: FieldModel
    level: int
    expo: int
    at_pi: complex | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "expo", self.expo % self.order_cap())

    def order_cap(self) -> int:
        p = self.F.p
        return (p - 1) * p ** (self.level - 1) if self.level >= 1 else 1

    # -- structure -----------------------------------------------------

    @property
    def conductor(self) -> int:
        """Smallest c >= 0 with trivial restriction to 1 + P^c.

        The exponent is stored against a generator of the full unit group
        mod p^level, so the character is trivial on all units exactly when
        the exponent vanishes, and trivial on 1 + P^c exactly when
        p^{level-c} divides the exponent.
        """
        return _conductor_of(self.F.p, self.level, self.expo)

    def at_level_expo(self, n: int) -> int:
        """Exponent of this character transported to unit level n.

        Raising is always possible; lowering needs triviality on 1 + P^n.
        Both directions go through discrete logs of one generator against
        the other, so transported characters stay exact.
        """
        return _transport_expo(self.F.p, self.level, self.expo, n)

    def at_level(self, n: int) -> "MultChar":
        return MultChar(self.F, n, self.at_level_expo(n), self.at_pi)

    @property
    def is_unit_char(self) -> bool:
        return self.at_pi is None

    def is_trivial_on_units(self) -> bool:
        return self.conductor == 0

    # -- evaluation ----------------------------------------------------

    def eval_unit_frac(self, u: int) -> Fraction:
        """Exact turn-exponent of the value on a unit residue."""
        if self.level == 0 or self.expo == 0:
            return Fraction(0)
        c = max(self.conductor, 1)
        e_c = self.at_level_expo(c)
        p = self.F.p
        _, table = _dlog_table(p, c)
        cap = (p - 1) * p ** (c - 1)
        return Fraction(e_c * table[u % p**c] % cap, cap)

    def eval_unit(self, u: int) -> complex:
        if self.level == 0 or self.expo == 0:
            return 1.0 + 0.0j
        c = max(self.conductor, 1)
        e_c = self.at_level_expo(c)
        p = self.F.p
        _, table = _dlog_table(p, c)
        cap = (p - 1) * p ** (c - 1)
        return turn_int(e_c * table[u % p**c], cap)

    def eval_vu(self, v: int, u: int) -> complex:
        """Value at pi^v u; requires at_pi when v != 0."""
        base = self.eval_unit(u)
        if v == 0:
            return base
        if self.at_pi is None:
            raise ValueError("character has no value at the uniformizer")
        return base * self.at_pi**v

    def __call__(self, x: PAdic) -> complex:
        if x.exact_zero:
            raise ZeroDivisionError("characters are not defined at zero")
        c = max(self.conductor, 1)
        return self.eval_vu(x.valuation(), x.unit_mod(c))

    # -- group operations ------------------------------------------------

    def _aligned(self, other: "MultChar") -> tuple[int, int, int]:
        n = max(self.level, other.level, 1)
        return n, self.at_level_expo(n), other.at_level_expo(n)

    def __mul__(self, other: "MultChar") -> "MultChar":
        n, e1, e2 = self._aligned(other)
        if self.at_pi is None or other.at_pi is None:
            pi_val = None
        else:
            pi_val = self.at_pi * other.at_pi
        return MultChar(self.F, n, e1 + e2, pi_val)

    def inverse(self) -> "MultChar":
        pi_val = None if self.at_pi is None else 1 / self.at_pi
        return MultChar(self.F, self.level, -self.expo, pi_val)

    def __pow__(self, k: int) -> "MultChar":
        pi_val = None if self.at_pi is None else self.at_pi**k
        return MultChar(self.F, self.level, self.expo * k, pi_val)

    def with_at_pi(self, z: complex | None) -> "MultChar":
        return MultChar(self.F, self.level, self.expo, z)

    def unit_part(self) -> "MultChar":
        return MultChar(self.F, self.level, self.expo, None)

    def same_unit_char(self, other: "MultChar") -> bool:
        n, e1, e2 = self._aligned(other)
        return e1 == e2


def trivial_char(F: FieldModel, at_pi: complex | None = None) -> MultChar:
    return MultChar(F, 0, 0, at_pi)


def eta0_char(F: FieldModel) -> MultChar:
    """The quadratic unit character extended by +1 at the uniformizer."""
    return MultChar(F, 1, (F.p - 1) // 2, 1.0 + 0.0j)


def enumerate_unit_chars(
    F: FieldModel, level: int, conductor: int | None = None
) -> Iterator[MultChar]:
    """All characters of O^x/(1+P^level), optionally of fixed conductor."""
    cap = (F.p - 1) * F.p ** (level - 1) if level >= 1 else 1
    for e in range(cap):
        chi = MultChar(F, level, e, None)
        if conductor is None or chi.conductor == conductor:
            yield chi


# ----------------------------------------------------------------------
# Gauss-type integrals and epsilon factors at the base field
# ----------------------------------------------------------------------


def gauss_unit_sum(F: FieldModel, chi: MultChar, m: int) -> complex:
    """q^{-m} sum over units mod p^m of psi(u/pi^m) chi(u).

    Only the unit part of chi enters, so symbolic callers can attach the
    uniformizer power themselves. Nonzero iff c(chi) = m, or m = 1 with
    chi unramified (value -1/q). The lattice is refined to the character's
    conductor so deeply ramified characters vanish by orthogonality rather
    than by accident of sampling.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    level = max(m, chi.conductor, 1)
    mod = F.p**m
    acc = 0j
    for u in F.unit_reps(level):
        acc += turn_int(u, mod) * chi.eval_unit(u)
    return acc * F.q ** (-level) * (1.0 + 0.0j)


def gauss_integral(F: FieldModel, chi: MultChar, m: int) -> complex:
    """q^{-m} sum over units mod p^m of psi(u/pi^m) chi(u pi^{-m}).

    Needs chi.at_pi. Nonzero exactly when c(chi) = m >= 1, where it equals
    the value at s = 1 of the abelian gamma factor of the inverse character,
    or when m = 1 and c(chi) = 0, where it equals -q^{-1} chi(pi)^{-1}.
    """
    if chi.at_pi is None:
        raise ValueError("gauss_integral needs a value at the uniformizer")
    return gauss_unit_sum(F, chi, m) * chi.at_pi ** (-m)


@lru_cache(maxsize=None)
def eps_half(F: FieldModel, chi: MultChar) -> complex:
    """Central-point epsilon factor of a character, psi fixed of level 0.

    Unramified characters give 1; for conductor c >= 1 this is
    q^{-c/2} sum_u chi^{-1}(u pi^{-c}) psi(u pi^{-c}), a unit-modulus number.
    Characters without a uniformizer value are treated as extended by 1.
    """
    c = chi.conductor
    if c == 0:
        return 1.0 + 0.0j
    at_pi = chi.at_pi if chi.at_pi is not None else 1.0 + 0.0j
    mod = F.p**c
    acc = 0j
    for u in F.unit_reps(c):
        acc += turn_int(u, mod) * chi.eval_unit(u).conjugate()
    return acc * at_pi**c * F.q ** (-c / 2)


def tau0(F: FieldModel) -> complex:
    """Normalized quadratic Gauss sum: integral over units of
    psi(u/pi) eta0(u) du (dt-measure, vol(O) = 1)."""
    eta = eta0_char(F)
    acc = 0j
    for u in range(1, F.p):
        acc += legendre(u, F.p) * turn(Fraction(u, F.p))
    return acc / F.p
