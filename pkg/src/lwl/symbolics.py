"""Laurent polynomials, rational Laurent data, and local gamma factors.

The transforms in this package act shell by shell, which turns them into
multiplication by rational functions of one Laurent variable (the value of
the twisting character at the uniformizer, coupled to q^s). This module
provides that arithmetic exactly: Laurent polynomials over the complex
numbers, rational functions whose denominators are kept as root data
prod_j (1 - b_j X)^{m_j}, annulus expansions around the origin, exact
"nonnegative-power part" evaluation, and Taylor expansion in s through
d/ds = log(q) X d/dX.

It also hosts the description of the ambient degree-three representation
(three unit characters with unimodular twists) and its gamma factors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .residue import FieldModel, MultChar, eps_half, trivial_char


# ----------------------------------------------------------------------
# Laurent polynomials
# ----------------------------------------------------------------------


@dataclass
class LaurentPoly:
    """A finite complex Laurent polynomial, sparse in the exponent."""

    coeffs: dict[int, complex] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.coeffs = {k: complex(v) for k, v in self.coeffs.items() if v != 0}

    @staticmethod
    def const(c: complex) -> "LaurentPoly":
        return LaurentPoly({0: c})

    @staticmethod
    def monomial(k: int, c: complex = 1.0) -> "LaurentPoly":
        return LaurentPoly({k: c})

    @property
    def support(self) -> tuple[int, int] | None:
        if not self.coeffs:
            return None
        return min(self.coeffs), max(self.coeffs)

    def __getitem__(self, k: int) -> complex:
        return self.coeffs.get(k, 0j)

    def __add__(self, other: "LaurentPoly") -> "LaurentPoly":
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out.get(k, 0j) + v
        return LaurentPoly(out)

    def __sub__(self, other: "LaurentPoly") -> "LaurentPoly":
        return self + other.scale(-1)

    def __mul__(self, other: "LaurentPoly") -> "LaurentPoly":
        out: dict[int, complex] = {}
        for k1, v1 in self.coeffs.items():
            for k2, v2 in other.coeffs.items():
                k = k1 + k2
                out[k] = out.get(k, 0j) + v1 * v2
        return LaurentPoly(out)

    def scale(self, c: complex) -> "LaurentPoly":
        return LaurentPoly({k: c * v for k, v in self.coeffs.items()})

    def shift(self, k: int) -> "LaurentPoly":
        """Multiply by X^k."""
        return LaurentPoly({i + k: v for i, v in self.coeffs.items()})

    def eval(self, x: complex) -> complex:
        return sum(v * x**k for k, v in self.coeffs.items())

    def derivative(self) -> "LaurentPoly":
        return LaurentPoly({k - 1: k * v for k, v in self.coeffs.items() if k})

    def x_derivative(self) -> "LaurentPoly":
        """X d/dX, the degree-weighting operator."""
        return LaurentPoly({k: k * v for k, v in self.coeffs.items()})

    def negative_part(self) -> "LaurentPoly":
        return LaurentPoly({k: v for k, v in self.coeffs.items() if k < 0})

    def nonnegative_part(self) -> "LaurentPoly":
        return LaurentPoly({k: v for k, v in self.coeffs.items() if k >= 0})

    def max_abs(self) -> float:
        return max((abs(v) for v in self.coeffs.values()), default=0.0)

    def cleaned(self, tol: float) -> "LaurentPoly":
        """Drop coefficients below tol relative to the largest one."""
        cut = tol * self.max_abs()
        return LaurentPoly({k: v for k, v in self.coeffs.items() if abs(v) > cut})

    def allclose(self, other: "LaurentPoly", tol: float = 1e-8) -> bool:
        scale = max(self.max_abs(), other.max_abs(), 1e-300)
        keys = set(self.coeffs) | set(other.coeffs)
        return all(abs(self[k] - other[k]) <= tol * scale for k in keys)


# ----------------------------------------------------------------------
# rational Laurent functions with product-form denominators
# ----------------------------------------------------------------------


@dataclass
class RationalLaurent:
    """num(X) / prod_j (1 - b_j X)^{m_j} with num a Laurent polynomial.

    The denominator roots are kept as data rather than expanded, so
    multiplication, differentiation, and annulus expansion are exact.
    """

    num: LaurentPoly
    den: tuple[tuple[complex, int], ...] = ()

    @staticmethod
    def const(c: complex) -> "RationalLaurent":
        return RationalLaurent(LaurentPoly.const(c))

    @staticmethod
    def from_poly(p: LaurentPoly) -> "RationalLaurent":
        return RationalLaurent(p)

    def den_poly(self) -> LaurentPoly:
        out = LaurentPoly.const(1.0)
        for b, m in self.den:
            factor = LaurentPoly({0: 1.0, 1: -b})
            for _ in range(m):
                out = out * factor
        return out

    def scale(self, c: complex) -> "RationalLaurent":
        return RationalLaurent(self.num.scale(c), self.den)

    def shift(self, k: int) -> "RationalLaurent":
        return RationalLaurent(self.num.shift(k), self.den)

    def times_poly(self, p: LaurentPoly) -> "RationalLaurent":
        return RationalLaurent(self.num * p, self.den)

    def __mul__(self, other: "RationalLaurent") -> "RationalLaurent":
        merged: dict[complex, int] = {}
        for b, m in self.den + other.den:
            merged[b] = merged.get(b, 0) + m
        return RationalLaurent(
            self.num * other.num, tuple(sorted(merged.items(), key=_root_key))
        )

    def __add__(self, other: "RationalLaurent") -> "RationalLaurent":
        merged: dict[complex, int] = {}
        for b, m in self.den:
            merged[b] = max(merged.get(b, 0), m)
        for b, m in other.den:
            merged[b] = max(merged.get(b, 0), m)
        num = LaurentPoly()
        for part in (self, other):
            extra = LaurentPoly.const(1.0)
            have = dict(part.den)
            for b, m in merged.items():
                for _ in range(m - have.get(b, 0)):
                    extra = extra * LaurentPoly({0: 1.0, 1: -b})
            num = num + part.num * extra
        return RationalLaurent(num, tuple(sorted(merged.items(), key=_root_key)))

    def eval(self, x: complex) -> complex:
        den = 1.0 + 0j
        for b, m in self.den:
            den *= (1 - b * x) ** m
        return self.num.eval(x) / den

    def pole_radius(self) -> float:
        """Distance from the origin to the nearest denominator pole."""
        rads = [1 / abs(b) for b, _ in self.den if b != 0]
        return min(rads, default=math.inf)

    def series_coefficients(self, k_max: int) -> LaurentPoly:
        """Annulus expansion at 0 up to X^{k_max} (exact coefficients).

        The expansion has finitely many negative powers, inherited from the
        numerator's negative support.
        """
        sup = self.num.support
        if sup is None:
            return LaurentPoly()
        k_min = sup[0]
        inv = {0: 1.0 + 0j}
        order = k_max - k_min
        for b, m in self.den:
            for _ in range(m):
                # multiply the series by 1/(1-bX): cumulative sums
                new: dict[int, complex] = {}
                acc = 0j
                for k in range(order + 1):
                    acc = inv.get(k, 0j) + b * acc
                    new[k] = acc
                inv = new
        out: dict[int, complex] = {}
        for k1, v1 in self.num.coeffs.items():
            for k2, v2 in inv.items():
                k = k1 + k2
                if k <= k_max:
                    out[k] = out.get(k, 0j) + v1 * v2
        return LaurentPoly(out)

    def negative_coefficients(self) -> LaurentPoly:
        """The (finitely many) negative-power coefficients of the expansion."""
        return self.series_coefficients(-1).negative_part()

    def derivative(self) -> "RationalLaurent":
        """d/dX, exactly, raising denominator multiplicities by one."""
        if not self.den:
            return RationalLaurent(self.num.derivative())
        roots = [b for b, _ in self.den]
        term = self.num.derivative()
        for b, _ in self.den:
            term = term * LaurentPoly({0: 1.0, 1: -b})
        for j, (b, m) in enumerate(self.den):
            piece = self.num.scale(m * b)
            for i, (bi, _) in enumerate(self.den):
                if i != j:
                    piece = piece * LaurentPoly({0: 1.0, 1: -bi})
            term = term + piece
        new_den = tuple((b, m + 1) for b, m in self.den)
        return RationalLaurent(term, new_den)

    def x_derivative(self) -> "RationalLaurent":
        return RationalLaurent(
            self.derivative().num.shift(1),
            tuple((b, m + 1) for b, m in self.den),
        )

    def plus_part_eval(self, x: complex, mode: str = "exact",
                       tol: float = 1e-12) -> complex:
        """Value at x of the nonnegative-power part of the expansion.

        ``exact`` subtracts the finite principal part from the closed-form
        value. ``series`` sums the expansion directly and requires x inside
        the pole radius; the geometric tail is pushed below tol. The two
        routes agree where both are legal, and tests exercise that.
        """
        if mode == "exact":
            return self.eval(x) - self.negative_coefficients().eval(x)
        if mode != "series":
            raise ValueError(f"unknown mode {mode!r}")
        rad = self.pole_radius()
        ax = abs(x)
        if ax >= rad:
            raise ValueError("series mode needs |x| inside the pole radius")
        ratio = ax / rad
        # crude but safe: expand far enough that the geometric envelope of
        # the remaining terms drops below tol relative to the partial sum
        k = max(8, self.num.support[1] if self.num.support else 0)
        while True:
            coeffs = self.series_coefficients(k)
            partial = coeffs.nonnegative_part().eval(x)
            top = abs(coeffs[k]) * ax**k
            tail = top * ratio / (1 - ratio)
            if tail <= tol * max(1.0, abs(partial)) or k > 4000:
                return partial
            k *= 2


def _root_key(item: tuple[complex, int]) -> tuple[float, float]:
    b = item[0]
    return (b.real, b.imag)


# ----------------------------------------------------------------------
# Taylor expansion in s at a point, for f(q^{s + shift}) shaped data
# ----------------------------------------------------------------------


def s_taylor(
    f: RationalLaurent, q: int, x0: complex, order: int
) -> list[complex]:
    """Taylor coefficients in s of s -> f(X) with X = x0 q^{s}, at s = 0.

    Uses d/ds = log(q) X d/dX; returns [f, f', f''/2!, ...] up to the
    requested order.
    """
    out = []
    cur = f
    fact = 1.0
    for k in range(order + 1):
        if k:
            fact *= k
        out.append(cur.eval(x0) / fact)
        if k < order:
            cur = cur.x_derivative().scale(math.log(q))
    return out


# ----------------------------------------------------------------------
# the ambient degree-three representation
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class PiData:
    """A principal-series triple: three unit characters and their twists.

    The product of the three characters must be trivial, both on units and
    at the uniformizer; that pins the central character.
    """

    F: FieldModel
    mus: tuple[MultChar, MultChar, MultChar]
    zs: tuple[complex, complex, complex]

    def __post_init__(self) -> None:
        prod = self.mus[0] * self.mus[1] * self.mus[2]
        if prod.conductor != 0:
            raise ValueError("unit characters must multiply to the trivial one")
        zprod = self.zs[0] * self.zs[1] * self.zs[2]
        if abs(zprod - 1) > 1e-9:
            raise ValueError("uniformizer values must multiply to 1")

    @property
    def conductor_exponent(self) -> int:
        return sum(mu.conductor for mu in self.mus)

    @property
    def degree_unramified(self) -> int:
        return sum(1 for mu in self.mus if mu.conductor == 0)

    @property
    def rho(self) -> int:
        return self.conductor_exponent + self.degree_unramified

    @property
    def stability_barrier(self) -> int:
        """Twist conductor from which the gamma factor degenerates to the
        abelian cube; at least 2 here."""
        return max(2, max(2 * mu.conductor for mu in self.mus))

    def unramified_params(self) -> list[complex]:
        return [z for mu, z in zip(self.mus, self.zs) if mu.conductor == 0]

    def dual(self) -> "PiData":
        mus = tuple(mu.inverse() for mu in self.mus)
        zs = tuple(1 / z for z in self.zs)
        return PiData(self.F, mus, zs)  # type: ignore[arg-type]

    def full_chars(self) -> list[MultChar]:
        return [mu.with_at_pi(z) for mu, z in zip(self.mus, self.zs)]


def pi_unramified(F: FieldModel, zs: Sequence[complex] = (1, 1, 1)) -> PiData:
    t = trivial_char(F)
    return PiData(F, (t, t, t), tuple(complex(z) for z in zs))  # type: ignore[arg-type]


# ----------------------------------------------------------------------
# gamma factors as rational Laurent data
# ----------------------------------------------------------------------


def gamma_gl1_X(F: FieldModel, chi: MultChar) -> RationalLaurent:
    """The abelian gamma factor in the variable X = q^s.

    For unramified chi with uniformizer value z this is
    (1 - z X^{-1}) / (1 - z^{-1} q^{-1} X); for ramified chi it is the
    monomial eps(1/2, chi, psi) q^{c/2} X^{-c} scaled by the uniformizer
    value's c-th power carried inside eps.
    """
    c = chi.conductor
    if c == 0:
        z = chi.at_pi if chi.at_pi is not None else 1.0 + 0j
        num = LaurentPoly({0: 1.0, -1: -z})
        return RationalLaurent(num, (((1 / z) / F.q, 1),))
    e = eps_half(F, chi)
    return RationalLaurent(LaurentPoly.monomial(-c, e * F.q ** (c / 2)))


def gamma_pi_X(pi: PiData, chi: MultChar) -> RationalLaurent:
    """Gamma factor of the triple twisted by a character, X = q^s."""
    out = RationalLaurent.const(1.0)
    for mu, z in zip(pi.mus, pi.zs):
        zc = chi.at_pi if chi.at_pi is not None else 1.0 + 0j
        full = (mu * chi.unit_part()).with_at_pi(z * zc)
        out = out * gamma_gl1_X(pi.F, full)
    return out


def gamma_pi_Y(pi: PiData, xi: MultChar) -> RationalLaurent:
    """Transform multiplier for the unit character xi in the shell variable.

    Writing Y = q^s / z for a twist with uniformizer value z, the z-
    dependence cancels and the factor depends on the unit part alone:
    unramified components give (1 - z_i Y^{-1}) / (1 - z_i^{-1} q^{-1} Y),
    ramified ones the monomial z_i^{c} eps(1/2, unit part, psi) q^{c/2}
    Y^{-c}.
    """
    out = RationalLaurent.const(1.0)
    for mu, z in zip(pi.mus, pi.zs):
        unit = (mu * xi).unit_part().with_at_pi(1.0 + 0j)
        c = unit.conductor
        if c == 0:
            num = LaurentPoly({0: 1.0, -1: -z})
            out = out * RationalLaurent(num, (((1 / z) / pi.F.q, 1),))
        else:
            e = eps_half(pi.F, unit)
            mono = LaurentPoly.monomial(-c, z**c * e * pi.F.q ** (c / 2))
            out = out * RationalLaurent(mono)
    return out


def gamma_is_monomial(r: RationalLaurent) -> bool:
    return not r.den and len(r.num.coeffs) == 1
